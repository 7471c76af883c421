#ifndef GDKIT_NET_HPP_
#define GDKIT_NET_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gdkit {

// Base learning rate 0.001 decayed by 0.9 every 10,000 steps.
double lr_schedule(std::int64_t step);
double lr_schedule(std::int64_t step, double base_lr, double decay_factor,
                   std::int64_t decay_every);

struct ConvSpec {
  int in_ch = 1;
  int out_ch = 1;
  int ksize = 3;
  int stride = 1;
  bool pad_same = true;
  // Fixed-affine normalization (scale 1, shift 0) followed by ReLU; off for
  // the last conv, which feeds the L2-normalization head directly.
  bool batch_norm = true;

  int out_size(int in_size) const {
    if (pad_same) return (in_size + stride - 1) / stride;
    return (in_size - ksize) / stride + 1;
  }
};

// All-convolutional descriptor towers. `full` is the 32x32 -> 128-d net;
// `micro` is the reduced 8x8 -> 8-d configuration used for whole-pipeline
// gradient checks and fast end-to-end runs; `small` sits in between.
struct NetArch {
  std::string name;
  int input_size = 0;
  int descriptor_dim = 0;
  std::vector<ConvSpec> convs;

  std::vector<int> spatial_trace() const;

  static const NetArch& full();
  static const NetArch& micro();
  static const NetArch& small();
  static const NetArch* find(std::string_view name);
};

// Dense B x C x H x W activation block.
template <typename T>
struct Tensor {
  int b = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  void resize(int b_, int c_, int h_, int w_) {
    b = b_;
    c = c_;
    h = h_;
    w = w_;
    data.assign(static_cast<std::size_t>(b) * c * h * w, T(0));
  }
  std::size_t image_stride() const {
    return static_cast<std::size_t>(c) * h * w;
  }
  T* image(int bi) { return data.data() + bi * image_stride(); }
  const T* image(int bi) const { return data.data() + bi * image_stride(); }
  T& at(int bi, int ci, int y, int x) {
    return data[bi * image_stride() +
                (static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  T at(int bi, int ci, int y, int x) const {
    return data[bi * image_stride() +
                (static_cast<std::size_t>(ci) * h + y) * w + x];
  }
};

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
class Network {
 public:
  struct Cache {
    Tensor<T> input;
    std::vector<Tensor<T>> normalized;  // post-normalization activations
    std::vector<std::vector<double>> bn_mean;
    std::vector<std::vector<double>> bn_inv_std;
    MatX<T> prenorm;               // features before L2 normalization
    std::vector<T> prenorm_norms;  // row norms (>= epsilon floor)
  };

  struct Gradients {
    std::vector<MatX<T>> weights;
  };

  explicit Network(const NetArch& arch);

  const NetArch& arch() const { return arch_; }

  // Conv weights, one (out_ch x in_ch*k*k) matrix per layer.
  std::vector<MatX<T>>& weights() { return weights_; }
  const std::vector<MatX<T>>& weights() const { return weights_; }

  // Per-channel running statistics for layers with normalization.
  std::vector<std::vector<double>>& running_mean() { return running_mean_; }
  std::vector<std::vector<double>>& running_var() { return running_var_; }
  const std::vector<std::vector<double>>& running_mean() const {
    return running_mean_;
  }
  const std::vector<std::vector<double>>& running_var() const {
    return running_var_;
  }

  void init_orthogonal(std::uint64_t seed);

  std::int64_t parameter_count() const;

  // Inference forward with the frozen running statistics; rows of the
  // result have unit L2 norm. Throws ShapeMismatch on wrong input size.
  MatX<T> forward(const Tensor<T>& input) const;

  // Training forward with per-batch statistics; fills the cache consumed by
  // backward(). Running statistics are not touched here so that repeated
  // evaluations (e.g. finite differences) see a pure function.
  MatX<T> forward_train(const Tensor<T>& input, Cache* cache) const;

  // Exact backprop from d(loss)/d(normalized features) to conv weights.
  void backward(const Cache& cache, const MatX<T>& grad_features,
                Gradients* grads) const;

  // Folds the cached batch statistics into the running averages.
  void update_running_stats(const Cache& cache, double momentum = 0.1);

 private:
  void check_input(const Tensor<T>& input) const;

  NetArch arch_;
  std::vector<MatX<T>> weights_;
  std::vector<std::vector<double>> running_mean_;
  std::vector<std::vector<double>> running_var_;
};

struct AdamConfig {
  double base_lr = 0.001;
  double weight_decay = 0.0001;  // decoupled
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double decay_factor = 0.9;
  std::int64_t decay_every = 10000;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::vector<MatX<T>> m;
  std::vector<MatX<T>> v;
  std::int64_t step = 0;

  void init_like(const Network<T>& net) {
    m.clear();
    v.clear();
    for (const auto& w : net.weights()) {
      m.push_back(MatX<T>::Zero(w.rows(), w.cols()));
      v.push_back(MatX<T>::Zero(w.rows(), w.cols()));
    }
    step = 0;
  }
};

// One Adam step with decoupled weight decay at the scheduled learning rate;
// increments the step counter.
template <typename T>
void adam_update(Network<T>& net, AdamState<T>& state,
                 const typename Network<T>::Gradients& grads);

}  // namespace gdkit

#endif  // GDKIT_NET_HPP_
