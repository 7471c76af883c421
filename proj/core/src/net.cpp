#include "gdkit/net.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "gdkit/error.hpp"
#include "gdkit/rng.hpp"

namespace gdkit {

namespace {

constexpr double kBnEpsilon = 1e-5;
constexpr int kReduceChunk = 32;  // fixed-size reduction chunks keep sums
                                  // independent of the thread count

int num_chunks(int batch) { return (batch + kReduceChunk - 1) / kReduceChunk; }

}  // namespace

double lr_schedule(std::int64_t step) {
  return lr_schedule(step, 0.001, 0.9, 10000);
}

double lr_schedule(std::int64_t step, double base_lr, double decay_factor,
                   std::int64_t decay_every) {
  return base_lr *
         std::pow(decay_factor, static_cast<double>(step / decay_every));
}

std::vector<int> NetArch::spatial_trace() const {
  std::vector<int> trace;
  int size = input_size;
  for (const ConvSpec& conv : convs) {
    size = conv.out_size(size);
    trace.push_back(size);
  }
  return trace;
}

const NetArch& NetArch::full() {
  static const NetArch arch{
      "full",
      32,
      128,
      {{1, 32, 3, 1, true, true},
       {32, 32, 3, 1, true, true},
       {32, 64, 3, 2, true, true},
       {64, 64, 3, 1, true, true},
       {64, 128, 3, 2, true, true},
       {128, 128, 3, 1, true, true},
       {128, 128, 8, 1, false, false}}};
  return arch;
}

const NetArch& NetArch::micro() {
  static const NetArch arch{"micro",
                            8,
                            8,
                            {{1, 8, 3, 2, true, true},
                             {8, 8, 4, 1, false, false}}};
  return arch;
}

const NetArch& NetArch::small() {
  static const NetArch arch{"small",
                            16,
                            64,
                            {{1, 16, 3, 1, true, true},
                             {16, 32, 3, 2, true, true},
                             {32, 64, 8, 1, false, false}}};
  return arch;
}

const NetArch* NetArch::find(std::string_view name) {
  if (name == "full") return &full();
  if (name == "micro") return &micro();
  if (name == "small") return &small();
  return nullptr;
}

namespace {

// Column matrix for one image: (in_ch*k*k) x (oh*ow), column-major so one
// output position occupies one contiguous column. `relu_input` reads the
// source through max(0, .), which lets callers keep only pre-activation
// tensors around.
template <typename T>
void im2col(const T* img, int in_ch, int in_h, int in_w, const ConvSpec& cs,
            bool relu_input, MatX<T>* col) {
  const int pad = cs.pad_same ? (cs.ksize - 1) / 2 : 0;
  const int out_h = cs.out_size(in_h);
  const int out_w = cs.out_size(in_w);
  col->resize(static_cast<Eigen::Index>(in_ch) * cs.ksize * cs.ksize,
              static_cast<Eigen::Index>(out_h) * out_w);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      T* column = col->data() + (static_cast<std::size_t>(oy) * out_w + ox) *
                                    col->rows();
      std::size_t r = 0;
      for (int ci = 0; ci < in_ch; ++ci) {
        const T* plane = img + static_cast<std::size_t>(ci) * in_h * in_w;
        for (int ky = 0; ky < cs.ksize; ++ky) {
          const int sy = oy * cs.stride + ky - pad;
          for (int kx = 0; kx < cs.ksize; ++kx, ++r) {
            const int sx = ox * cs.stride + kx - pad;
            T v = T(0);
            if (sy >= 0 && sy < in_h && sx >= 0 && sx < in_w) {
              v = plane[static_cast<std::size_t>(sy) * in_w + sx];
              if (relu_input && v < T(0)) v = T(0);
            }
            column[r] = v;
          }
        }
      }
    }
  }
}

// Scatter-add of a column matrix back into an image (transpose of im2col).
template <typename T>
void col2im_add(const MatX<T>& col, int in_ch, int in_h, int in_w,
                const ConvSpec& cs, T* img) {
  const int pad = cs.pad_same ? (cs.ksize - 1) / 2 : 0;
  const int out_h = cs.out_size(in_h);
  const int out_w = cs.out_size(in_w);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const T* column = col.data() + (static_cast<std::size_t>(oy) * out_w + ox) *
                                         col.rows();
      std::size_t r = 0;
      for (int ci = 0; ci < in_ch; ++ci) {
        T* plane = img + static_cast<std::size_t>(ci) * in_h * in_w;
        for (int ky = 0; ky < cs.ksize; ++ky) {
          const int sy = oy * cs.stride + ky - pad;
          for (int kx = 0; kx < cs.ksize; ++kx, ++r) {
            const int sx = ox * cs.stride + kx - pad;
            if (sy >= 0 && sy < in_h && sx >= 0 && sx < in_w) {
              plane[static_cast<std::size_t>(sy) * in_w + sx] += column[r];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_forward(const Tensor<T>& in, bool relu_input, const MatX<T>& weight,
                  const ConvSpec& cs, Tensor<T>* out) {
  const int out_h = cs.out_size(in.h);
  const int out_w = cs.out_size(in.w);
  out->resize(in.b, cs.out_ch, out_h, out_w);
  const Eigen::Index n_pix = static_cast<Eigen::Index>(out_h) * out_w;
#ifdef GDKIT_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int bi = 0; bi < in.b; ++bi) {
    MatX<T> col;
    im2col(in.image(bi), in.c, in.h, in.w, cs, relu_input, &col);
    Eigen::Map<MatX<T>> out_map(out->image(bi), n_pix, cs.out_ch);
    out_map.noalias() = col.transpose() * weight.transpose();
  }
}

// Per-channel batch mean/var with a fixed chunk-ordered double reduction.
template <typename T>
void batch_statistics(const Tensor<T>& x, std::vector<double>* mean,
                      std::vector<double>* var) {
  const int chunks = num_chunks(x.b);
  const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
  MatX<double> part_sum = MatX<double>::Zero(x.c, chunks);
  MatX<double> part_sq = MatX<double>::Zero(x.c, chunks);
#ifdef GDKIT_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int ch = 0; ch < chunks; ++ch) {
    const int b0 = ch * kReduceChunk;
    const int b1 = std::min(x.b, b0 + kReduceChunk);
    for (int bi = b0; bi < b1; ++bi) {
      const T* img = x.image(bi);
      for (int ci = 0; ci < x.c; ++ci) {
        const T* p = img + ci * plane;
        double s = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
          const double v = static_cast<double>(p[i]);
          s += v;
          sq += v * v;
        }
        part_sum(ci, ch) += s;
        part_sq(ci, ch) += sq;
      }
    }
  }
  const double count = static_cast<double>(x.b) * plane;
  mean->assign(x.c, 0.0);
  var->assign(x.c, 0.0);
  for (int ci = 0; ci < x.c; ++ci) {
    double s = 0.0, sq = 0.0;
    for (int ch = 0; ch < chunks; ++ch) {
      s += part_sum(ci, ch);
      sq += part_sq(ci, ch);
    }
    const double m = s / count;
    (*mean)[ci] = m;
    (*var)[ci] = std::max(0.0, sq / count - m * m);
  }
}

template <typename T>
void normalize_inplace(Tensor<T>* x, const std::vector<double>& mean,
                       const std::vector<double>& inv_std) {
  const std::size_t plane = static_cast<std::size_t>(x->h) * x->w;
#ifdef GDKIT_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int bi = 0; bi < x->b; ++bi) {
    T* img = x->image(bi);
    for (int ci = 0; ci < x->c; ++ci) {
      T* p = img + ci * plane;
      const double m = mean[ci];
      const double s = inv_std[ci];
      for (std::size_t i = 0; i < plane; ++i) {
        p[i] = static_cast<T>((static_cast<double>(p[i]) - m) * s);
      }
    }
  }
}

}  // namespace

template <typename T>
Network<T>::Network(const NetArch& arch) : arch_(arch) {
  for (const ConvSpec& cs : arch_.convs) {
    weights_.push_back(
        MatX<T>::Zero(cs.out_ch, static_cast<Eigen::Index>(cs.in_ch) *
                                     cs.ksize * cs.ksize));
    running_mean_.push_back(
        std::vector<double>(cs.batch_norm ? cs.out_ch : 0, 0.0));
    running_var_.push_back(
        std::vector<double>(cs.batch_norm ? cs.out_ch : 0, 1.0));
  }
}

template <typename T>
void Network<T>::init_orthogonal(std::uint64_t seed) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Eigen::Index rows = weights_[l].rows();
    const Eigen::Index cols = weights_[l].cols();
    const Eigen::Index big = std::max(rows, cols);
    const Eigen::Index sml = std::min(rows, cols);

    RandomStream stream({seed, 0x6f727468ULL /*"orth"*/, l});
    Eigen::MatrixXd gauss(big, sml);
    for (Eigen::Index j = 0; j < sml; ++j) {
      for (Eigen::Index i = 0; i < big; ++i) {
        gauss(i, j) = stream.next_gaussian();
      }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(big, sml);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(sml);
    for (Eigen::Index j = 0; j < sml; ++j) {
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    if (rows <= cols) {
      weights_[l] = q.transpose().cast<T>();
    } else {
      weights_[l] = q.cast<T>();
    }
    if (!arch_.convs[l].batch_norm) continue;
    std::fill(running_mean_[l].begin(), running_mean_[l].end(), 0.0);
    std::fill(running_var_[l].begin(), running_var_[l].end(), 1.0);
  }
}

template <typename T>
std::int64_t Network<T>::parameter_count() const {
  std::int64_t count = 0;
  for (const auto& w : weights_) count += w.size();
  return count;
}

template <typename T>
void Network<T>::check_input(const Tensor<T>& input) const {
  if (input.b < 1 || input.c != 1 || input.h != arch_.input_size ||
      input.w != arch_.input_size) {
    throw Error(ErrorCode::kShapeMismatch,
                "expected Bx1x" + std::to_string(arch_.input_size) + "x" +
                    std::to_string(arch_.input_size) + " input, got " +
                    std::to_string(input.b) + "x" + std::to_string(input.c) +
                    "x" + std::to_string(input.h) + "x" +
                    std::to_string(input.w));
  }
}

template <typename T>
MatX<T> Network<T>::forward(const Tensor<T>& input) const {
  check_input(input);
  Tensor<T> cur = input;
  Tensor<T> next;
  for (std::size_t l = 0; l < arch_.convs.size(); ++l) {
    const ConvSpec& cs = arch_.convs[l];
    conv_forward(cur, l > 0, weights_[l], cs, &next);
    if (cs.batch_norm) {
      std::vector<double> inv_std(cs.out_ch);
      for (int ci = 0; ci < cs.out_ch; ++ci) {
        inv_std[ci] = 1.0 / std::sqrt(running_var_[l][ci] + kBnEpsilon);
      }
      normalize_inplace(&next, running_mean_[l], inv_std);
    }
    std::swap(cur, next);
  }

  MatX<T> feats(cur.b, arch_.descriptor_dim);
  for (int bi = 0; bi < cur.b; ++bi) {
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> row(
        cur.image(bi), arch_.descriptor_dim);
    const T norm = std::max(row.norm(), T(1e-12));
    feats.row(bi) = (row / norm).transpose();
  }
  return feats;
}

template <typename T>
MatX<T> Network<T>::forward_train(const Tensor<T>& input, Cache* cache) const {
  check_input(input);
  cache->input = input;
  cache->normalized.clear();
  cache->bn_mean.assign(arch_.convs.size(), {});
  cache->bn_inv_std.assign(arch_.convs.size(), {});

  Tensor<T> next;
  for (std::size_t l = 0; l < arch_.convs.size(); ++l) {
    const ConvSpec& cs = arch_.convs[l];
    const Tensor<T>& cur = (l == 0) ? cache->input : cache->normalized[l - 1];
    conv_forward(cur, l > 0, weights_[l], cs, &next);
    if (cs.batch_norm) {
      std::vector<double> mean, var;
      batch_statistics(next, &mean, &var);
      std::vector<double> inv_std(cs.out_ch);
      for (int ci = 0; ci < cs.out_ch; ++ci) {
        inv_std[ci] = 1.0 / std::sqrt(var[ci] + kBnEpsilon);
      }
      normalize_inplace(&next, mean, inv_std);
      cache->bn_mean[l] = std::move(mean);
      cache->bn_inv_std[l] = std::move(inv_std);
    }
    cache->normalized.push_back(std::move(next));
    next = Tensor<T>();
  }

  const Tensor<T>& last = cache->normalized.back();
  cache->prenorm.resize(last.b, arch_.descriptor_dim);
  cache->prenorm_norms.resize(last.b);
  MatX<T> feats(last.b, arch_.descriptor_dim);
  for (int bi = 0; bi < last.b; ++bi) {
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> row(
        last.image(bi), arch_.descriptor_dim);
    cache->prenorm.row(bi) = row.transpose();
    const T norm = std::max(row.norm(), T(1e-12));
    cache->prenorm_norms[bi] = norm;
    feats.row(bi) = (row / norm).transpose();
  }
  return feats;
}

template <typename T>
void Network<T>::backward(const Cache& cache, const MatX<T>& grad_features,
                          Gradients* grads) const {
  const int batch = cache.input.b;
  if (grad_features.rows() != batch ||
      grad_features.cols() != arch_.descriptor_dim) {
    throw Error(ErrorCode::kShapeMismatch,
                "feature gradient shape does not match the network output");
  }

  grads->weights.clear();
  for (const auto& w : weights_) {
    grads->weights.push_back(MatX<T>::Zero(w.rows(), w.cols()));
  }

  // Through the final row L2-normalization: remove the radial component.
  Tensor<T> grad_out;
  grad_out.resize(batch, arch_.descriptor_dim, 1, 1);
  for (int bi = 0; bi < batch; ++bi) {
    const T norm = cache.prenorm_norms[bi];
    const Eigen::Matrix<T, Eigen::Dynamic, 1> unit =
        cache.prenorm.row(bi).transpose() / norm;
    const Eigen::Matrix<T, Eigen::Dynamic, 1> g =
        grad_features.row(bi).transpose();
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(
        grad_out.image(bi), arch_.descriptor_dim) =
        (g - unit * unit.dot(g)) / norm;
  }

  for (int l = static_cast<int>(arch_.convs.size()) - 1; l >= 0; --l) {
    const ConvSpec& cs = arch_.convs[l];
    const Tensor<T>& in_tensor =
        (l == 0) ? cache.input : cache.normalized[l - 1];
    const bool relu_input = l > 0;
    const Eigen::Index n_pix =
        static_cast<Eigen::Index>(grad_out.h) * grad_out.w;

    // Weight gradient, reduced over fixed-size image chunks in order.
    const int chunks = num_chunks(batch);
    std::vector<MatX<T>> partial(
        chunks, MatX<T>::Zero(weights_[l].rows(), weights_[l].cols()));
#ifdef GDKIT_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int ch = 0; ch < chunks; ++ch) {
      const int b0 = ch * kReduceChunk;
      const int b1 = std::min(batch, b0 + kReduceChunk);
      MatX<T> col;
      for (int bi = b0; bi < b1; ++bi) {
        im2col(in_tensor.image(bi), in_tensor.c, in_tensor.h, in_tensor.w, cs,
               relu_input, &col);
        Eigen::Map<const MatX<T>> dout(grad_out.image(bi), n_pix, cs.out_ch);
        partial[ch].noalias() += dout.transpose() * col.transpose();
      }
    }
    MatX<double> acc =
        MatX<double>::Zero(weights_[l].rows(), weights_[l].cols());
    for (int ch = 0; ch < chunks; ++ch) acc += partial[ch].template cast<double>();
    grads->weights[l] = acc.cast<T>();

    if (l == 0) break;

    // Gradient w.r.t. this conv's input (the ReLU output of block l-1).
    Tensor<T> grad_in;
    grad_in.resize(batch, in_tensor.c, in_tensor.h, in_tensor.w);
#ifdef GDKIT_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int bi = 0; bi < batch; ++bi) {
      Eigen::Map<const MatX<T>> dout(grad_out.image(bi), n_pix, cs.out_ch);
      MatX<T> dcol(weights_[l].cols(), n_pix);
      dcol.noalias() = weights_[l].transpose() * dout.transpose();
      col2im_add(dcol, in_tensor.c, in_tensor.h, in_tensor.w, cs,
                 grad_in.image(bi));
    }

    // ReLU mask from the cached pre-activation tensor.
    const Tensor<T>& xhat = cache.normalized[l - 1];
#ifdef GDKIT_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int bi = 0; bi < batch; ++bi) {
      T* g = grad_in.image(bi);
      const T* x = xhat.image(bi);
      const std::size_t n = grad_in.image_stride();
      for (std::size_t i = 0; i < n; ++i) {
        if (x[i] <= T(0)) g[i] = T(0);
      }
    }

    // Batch-normalization backward (fixed affine), full statistics chain.
    if (arch_.convs[l - 1].batch_norm) {
      const std::size_t plane =
          static_cast<std::size_t>(grad_in.h) * grad_in.w;
      const double count = static_cast<double>(batch) * plane;
      MatX<double> part1 = MatX<double>::Zero(grad_in.c, chunks);
      MatX<double> part2 = MatX<double>::Zero(grad_in.c, chunks);
#ifdef GDKIT_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
      for (int ch = 0; ch < chunks; ++ch) {
        const int b0 = ch * kReduceChunk;
        const int b1 = std::min(batch, b0 + kReduceChunk);
        for (int bi = b0; bi < b1; ++bi) {
          const T* g = grad_in.image(bi);
          const T* x = xhat.image(bi);
          for (int ci = 0; ci < grad_in.c; ++ci) {
            double s1 = 0.0, s2 = 0.0;
            const T* gp = g + ci * plane;
            const T* xp = x + ci * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              s1 += static_cast<double>(gp[i]);
              s2 += static_cast<double>(gp[i]) * static_cast<double>(xp[i]);
            }
            part1(ci, ch) += s1;
            part2(ci, ch) += s2;
          }
        }
      }
      std::vector<double> mean_g(grad_in.c, 0.0), mean_gx(grad_in.c, 0.0);
      for (int ci = 0; ci < grad_in.c; ++ci) {
        double s1 = 0.0, s2 = 0.0;
        for (int ch = 0; ch < chunks; ++ch) {
          s1 += part1(ci, ch);
          s2 += part2(ci, ch);
        }
        mean_g[ci] = s1 / count;
        mean_gx[ci] = s2 / count;
      }
      const std::vector<double>& inv_std = cache.bn_inv_std[l - 1];
#ifdef GDKIT_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
      for (int bi = 0; bi < batch; ++bi) {
        T* g = grad_in.image(bi);
        const T* x = xhat.image(bi);
        for (int ci = 0; ci < grad_in.c; ++ci) {
          T* gp = g + ci * plane;
          const T* xp = x + ci * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            gp[i] = static_cast<T>(
                inv_std[ci] *
                (static_cast<double>(gp[i]) - mean_g[ci] -
                 static_cast<double>(xp[i]) * mean_gx[ci]));
          }
        }
      }
    }

    grad_out = std::move(grad_in);
  }
}

template <typename T>
void Network<T>::update_running_stats(const Cache& cache, double momentum) {
  for (std::size_t l = 0; l < arch_.convs.size(); ++l) {
    if (!arch_.convs[l].batch_norm) continue;
    for (std::size_t ci = 0; ci < running_mean_[l].size(); ++ci) {
      const double mean = cache.bn_mean[l][ci];
      const double inv_std = cache.bn_inv_std[l][ci];
      const double var = 1.0 / (inv_std * inv_std) - kBnEpsilon;
      running_mean_[l][ci] =
          (1.0 - momentum) * running_mean_[l][ci] + momentum * mean;
      running_var_[l][ci] =
          (1.0 - momentum) * running_var_[l][ci] + momentum * std::max(0.0, var);
    }
  }
}

template <typename T>
void adam_update(Network<T>& net, AdamState<T>& state,
                 const typename Network<T>::Gradients& grads) {
  if (state.m.size() != net.weights().size()) {
    throw Error(ErrorCode::kSizeMismatch,
                "optimizer state does not match the network layout");
  }
  const AdamConfig& cfg = state.config;
  const double lr = lr_schedule(state.step, cfg.base_lr, cfg.decay_factor,
                                cfg.decay_every);
  const double t = static_cast<double>(state.step + 1);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    MatX<T>& w = net.weights()[l];
    MatX<T>& m = state.m[l];
    MatX<T>& v = state.v[l];
    const MatX<T>& g = grads.weights[l];
    m = (cfg.beta1 * m + (1.0 - cfg.beta1) * g).eval();
    v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square())
            .matrix()
            .eval();
    const auto m_hat = m.array() / bias1;
    const auto v_hat = v.array() / bias2;
    w = (w.array() * (1.0 - lr * cfg.weight_decay) -
         lr * m_hat / (v_hat.sqrt() + cfg.epsilon))
            .matrix()
            .eval();
  }
  ++state.step;
}

template class Network<float>;
template class Network<double>;
template void adam_update<float>(Network<float>&, AdamState<float>&,
                                 const Network<float>::Gradients&);
template void adam_update<double>(Network<double>&, AdamState<double>&,
                                  const Network<double>::Gradients&);

}  // namespace gdkit
