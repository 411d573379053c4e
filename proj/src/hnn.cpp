#include "hnnmc/hnn.hpp"

#include <omp.h>

#include <cstdio>
#include <cstring>
#include <fstream>

namespace hnnmc {

namespace {

inline void activate(Activation act, const Vec& z, Vec& a, Vec& d1, Vec& d2) {
  if (act == Activation::Tanh) {
    a = z.array().tanh();
    d1 = 1.0 - a.array().square();
    d2 = -2.0 * a.array() * d1.array();
  } else {
    a = z.array().sin();
    d1 = z.array().cos();
    d2 = -a;
  }
}

// Per-thread scratch for the forward / input-gradient / parameter-gradient
// sweeps. Sized lazily for the model at hand.
struct Workspace {
  std::vector<Vec> z, a, d1, d2, Rz, Ra;
  Vec xt, colsum, u, s, bar_Ra, bar_a, bar_Rz, bar_z, gbar;

  void resize(const HnnModel& m) {
    const int hl = m.hidden_layers();
    z.resize(hl);
    a.resize(hl);
    d1.resize(hl);
    d2.resize(hl);
    Rz.resize(hl);
    Ra.resize(hl);
  }
};

// colsum = V^T 1, the adjoint of the latent sum at the last hidden layer.
Vec output_colsum(const HnnModel& m) { return m.weights.back().colwise().sum().transpose(); }

void forward_sweep(const HnnModel& m, const Vec& x, Workspace& w) {
  w.xt = (x - m.input_mean).cwiseQuotient(m.input_scale);
  const Vec* prev = &w.xt;
  for (int l = 0; l < m.hidden_layers(); ++l) {
    w.z[l].noalias() = m.weights[l] * (*prev);
    w.z[l] += m.biases[l];
    activate(m.activation, w.z[l], w.a[l], w.d1[l], w.d2[l]);
    prev = &w.a[l];
  }
}

// Input gradient of H_theta in standardized coordinates; forward_sweep must
// have run.
void input_gradient_sweep(const HnnModel& m, Workspace& w, Vec& gtilde) {
  const int hl = m.hidden_layers();
  w.u = output_colsum(m);
  for (int l = hl - 1; l >= 0; --l) {
    w.s = w.u.cwiseProduct(w.d1[l]);
    w.u.noalias() = m.weights[l].transpose() * w.s;
  }
  gtilde = w.u;
}

}  // namespace

HnnModel make_hnn_model(int input_dim, int latent_dim, int hidden_layers, int hidden_units,
                        Activation activation, Rng& rng) {
  if (input_dim < 2 || input_dim % 2 != 0)
    throw InvalidArgument("make_hnn_model: input_dim must be even and >= 2");
  if (latent_dim < 1 || hidden_layers < 1 || hidden_units < 1)
    throw InvalidArgument("make_hnn_model: bad architecture");
  HnnModel m;
  m.input_dim = input_dim;
  m.latent_dim = latent_dim;
  m.activation = activation;
  auto glorot = [&rng](int rows, int cols) {
    double lim = std::sqrt(6.0 / (rows + cols));
    Mat w(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) w(i, j) = rng.uniform(-lim, lim);
    return w;
  };
  int prev = input_dim;
  for (int l = 0; l < hidden_layers; ++l) {
    m.weights.push_back(glorot(hidden_units, prev));
    m.biases.push_back(Vec::Zero(hidden_units));
    prev = hidden_units;
  }
  m.weights.push_back(glorot(latent_dim, prev));
  m.biases.push_back(Vec::Zero(latent_dim));
  m.input_mean = Vec::Zero(input_dim);
  m.input_scale = Vec::Ones(input_dim);
  return m;
}

ForwardResult forward(const HnnModel& model, const Vec& x) {
  if (x.size() != model.input_dim)
    throw InvalidArgument("hnn forward: expected input dim " + std::to_string(model.input_dim));
  Workspace w;
  w.resize(model);
  forward_sweep(model, x, w);
  ForwardResult r;
  const Vec& last = model.hidden_layers() > 0 ? w.a.back() : w.xt;
  r.latents.noalias() = model.weights.back() * last;
  r.latents += model.biases.back();
  r.h_theta = r.latents.sum();
  return r;
}

namespace {

void gradients_into(const HnnModel& model, const Vec& x, Workspace& w, Vec& g_phys) {
  forward_sweep(model, x, w);
  Vec gtilde;
  input_gradient_sweep(model, w, gtilde);
  g_phys = gtilde.cwiseQuotient(model.input_scale);
}

}  // namespace

HnnGradients predict_gradients(const HnnModel& model, const Vec& x) {
  if (x.size() != model.input_dim)
    throw InvalidArgument("predict_gradients: expected input dim " +
                          std::to_string(model.input_dim));
  Workspace w;
  w.resize(model);
  Vec g;
  gradients_into(model, x, w, g);
  const int d = model.phase_dim();
  return {g.head(d), g.tail(d)};
}

void predict_gradients_batch(const HnnModel& model, const Mat& X, Mat& G, bool parallel) {
  if (X.rows() != model.input_dim) throw InvalidArgument("predict_gradients_batch: bad input dim");
  const int n = static_cast<int>(X.cols());
  G.resize(X.rows(), n);
#pragma omp parallel if (parallel)
  {
    Workspace w;
    w.resize(model);
    Vec g;
#pragma omp for schedule(static)
    for (int j = 0; j < n; ++j) {
      gradients_into(model, X.col(j), w, g);
      G.col(j) = g;
    }
  }
}

void TrainingDataset::append(const TrainingDataset& other) {
  if (inputs.size() == 0) {
    *this = other;
    return;
  }
  if (other.inputs.rows() != inputs.rows())
    throw InvalidArgument("TrainingDataset::append: dimension mismatch");
  Mat in(inputs.rows(), inputs.cols() + other.inputs.cols());
  in << inputs, other.inputs;
  Mat lb(labels.rows(), labels.cols() + other.labels.cols());
  lb << labels, other.labels;
  inputs = std::move(in);
  labels = std::move(lb);
}

namespace {

struct GradSet {
  std::vector<Mat> dW;
  std::vector<Vec> db;
  double loss = 0.0;

  void init_like(const HnnModel& m) {
    dW.clear();
    db.clear();
    for (size_t i = 0; i < m.weights.size(); ++i) {
      dW.push_back(Mat::Zero(m.weights[i].rows(), m.weights[i].cols()));
      db.push_back(Vec::Zero(m.biases[i].size()));
    }
    loss = 0.0;
  }
  void set_zero() {
    for (auto& w : dW) w.setZero();
    for (auto& b : db) b.setZero();
    loss = 0.0;
  }
};

// Loss and parameter gradient of one sample. The loss depends on the weights
// through the network's input-gradient, so this runs a forward-over-reverse
// tangent sweep followed by its adjoint.
double accumulate_sample(const HnnModel& m, const Vec& x, const Vec& y, Workspace& w,
                         GradSet& gs) {
  const int hl = m.hidden_layers();
  const int d = m.phase_dim();
  forward_sweep(m, x, w);
  Vec gtilde;
  input_gradient_sweep(m, w, gtilde);
  Vec g_phys = gtilde.cwiseQuotient(m.input_scale);

  // residuals of the printed two-term loss
  Vec r1 = y.head(d) - g_phys.tail(d);   // dq/dt - dH/dp
  Vec r2 = y.tail(d) + g_phys.head(d);   // dp/dt + dH/dq
  double loss = r1.squaredNorm() + r2.squaredNorm();

  w.gbar.resize(2 * d);
  w.gbar.head(d) = 2.0 * r2;
  w.gbar.tail(d) = -2.0 * r1;
  w.gbar = w.gbar.cwiseQuotient(m.input_scale);  // d loss / d gtilde

  // tangent sweep along gbar
  const Vec* Rprev = &w.gbar;
  for (int l = 0; l < hl; ++l) {
    w.Rz[l].noalias() = m.weights[l] * (*Rprev);
    w.Ra[l] = w.d1[l].cwiseProduct(w.Rz[l]);
    Rprev = &w.Ra[l];
  }

  // adjoint of the tangent sweep; the latent layer contributes a rank-one
  // weight gradient and seeds bar_Ra with V^T 1
  gs.dW[hl].noalias() += Vec::Ones(m.latent_dim) * w.Ra[hl - 1].transpose();
  w.bar_Ra = output_colsum(m);
  w.bar_a = Vec::Zero(w.bar_Ra.size());
  for (int l = hl - 1; l >= 0; --l) {
    w.bar_Rz = w.d1[l].cwiseProduct(w.bar_Ra);
    w.bar_z = w.d2[l].cwiseProduct(w.Rz[l]).cwiseProduct(w.bar_Ra) + w.d1[l].cwiseProduct(w.bar_a);
    const Vec& a_prev = l > 0 ? w.a[l - 1] : w.xt;
    const Vec& Ra_prev = l > 0 ? w.Ra[l - 1] : w.gbar;
    gs.dW[l].noalias() += w.bar_Rz * Ra_prev.transpose();
    gs.dW[l].noalias() += w.bar_z * a_prev.transpose();
    gs.db[l] += w.bar_z;
    if (l > 0) {
      w.bar_Ra.noalias() = m.weights[l].transpose() * w.bar_Rz;
      w.bar_a.noalias() = m.weights[l].transpose() * w.bar_z;
    }
  }
  return loss;
}

constexpr int kReduceBlock = 64;  // fixed blocking keeps reductions bit-stable
                                  // for any thread count

double batch_loss_and_grad(const HnnModel& m, const TrainingDataset& data,
                           const std::vector<int>& idx, int begin, int end, GradSet& total,
                           std::vector<GradSet>& blocks, bool with_grad) {
  const int n = end - begin;
  const int nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  if (static_cast<int>(blocks.size()) < nblocks) blocks.resize(nblocks);

#pragma omp parallel
  {
    Workspace w;
    w.resize(m);
    Vec g;
#pragma omp for schedule(static)
    for (int b = 0; b < nblocks; ++b) {
      GradSet& gs = blocks[b];
      if (gs.dW.empty())
        gs.init_like(m);
      else
        gs.set_zero();
      const int lo = begin + b * kReduceBlock;
      const int hi = std::min(end, lo + kReduceBlock);
      for (int t = lo; t < hi; ++t) {
        const int col = idx[t];
        if (with_grad) {
          gs.loss += accumulate_sample(m, data.inputs.col(col), data.labels.col(col), w, gs);
        } else {
          gradients_into(m, data.inputs.col(col), w, g);
          const int d = m.phase_dim();
          gs.loss += (data.labels.col(col).head(d) - g.tail(d)).squaredNorm() +
                     (data.labels.col(col).tail(d) + g.head(d)).squaredNorm();
        }
      }
    }
  }

  double loss = 0.0;
  if (with_grad) total.set_zero();
  for (int b = 0; b < nblocks; ++b) {
    loss += blocks[b].loss;
    if (with_grad) {
      for (size_t i = 0; i < total.dW.size(); ++i) {
        total.dW[i] += blocks[b].dW[i];
        total.db[i] += blocks[b].db[i];
      }
    }
  }
  return loss / n;
}

struct AdamState {
  std::vector<Mat> mW, vW;
  std::vector<Vec> mb, vb;
  long step = 0;

  void init_like(const HnnModel& m) {
    for (size_t i = 0; i < m.weights.size(); ++i) {
      mW.push_back(Mat::Zero(m.weights[i].rows(), m.weights[i].cols()));
      vW.push_back(Mat::Zero(m.weights[i].rows(), m.weights[i].cols()));
      mb.push_back(Vec::Zero(m.biases[i].size()));
      vb.push_back(Vec::Zero(m.biases[i].size()));
    }
  }

  void update(HnnModel& m, const GradSet& g, double lr, double scale) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++step;
    const double c1 = 1.0 - std::pow(b1, step);
    const double c2 = 1.0 - std::pow(b2, step);
    for (size_t i = 0; i < m.weights.size(); ++i) {
      Mat gw = g.dW[i] * scale;
      mW[i] = b1 * mW[i] + (1 - b1) * gw;
      vW[i] = b2 * vW[i] + (1 - b2) * gw.cwiseProduct(gw);
      m.weights[i].array() -=
          lr * (mW[i].array() / c1) / ((vW[i].array() / c2).sqrt() + eps);
      Vec gb = g.db[i] * scale;
      mb[i] = b1 * mb[i] + (1 - b1) * gb;
      vb[i] = b2 * vb[i].array().matrix() + (1 - b2) * gb.cwiseProduct(gb);
      m.biases[i].array() -= lr * (mb[i].array() / c1) / ((vb[i].array() / c2).sqrt() + eps);
    }
  }
};

}  // namespace

double hnn_loss(const HnnModel& model, const TrainingDataset& data) {
  const int n = data.size();
  if (n == 0) throw InvalidArgument("hnn_loss: empty batch");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  GradSet dummy;
  std::vector<GradSet> blocks;
  return batch_loss_and_grad(model, data, idx, 0, n, dummy, blocks, false);
}

LossGradients hnn_loss_gradient(const HnnModel& model, const TrainingDataset& data) {
  const int n = data.size();
  if (n == 0) throw InvalidArgument("hnn_loss_gradient: empty batch");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  GradSet total;
  total.init_like(model);
  std::vector<GradSet> blocks;
  LossGradients out;
  out.loss = batch_loss_and_grad(model, data, idx, 0, n, total, blocks, true);
  for (auto& w : total.dW) out.d_weights.push_back(w / n);
  for (auto& b : total.db) out.d_biases.push_back(b / n);
  return out;
}

TrainResult train(HnnModel& model, const TrainingDataset& data, const TrainConfig& cfg) {
  TrainResult res;
  if (cfg.epochs == 0) return res;
  const int n = data.size();
  if (n == 0) throw InvalidArgument("train: empty dataset");
  if (data.inputs.rows() != model.input_dim)
    throw InvalidArgument("train: dataset dimension does not match model");

  Rng rng(cfg.rng_seed);

  // Standardization is fitted once on a fresh model; continued training keeps
  // the statistics the existing weights were learned against.
  const bool fresh = model.input_mean.isZero(0.0) && (model.input_scale.array() == 1.0).all();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  int n_val = cfg.val_fraction > 0.0 && n > 1
                  ? std::max(1, static_cast<int>(std::lround(cfg.val_fraction * n)))
                  : 0;
  if (n_val >= n) n_val = n - 1;
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());
  const int n_train = static_cast<int>(train_idx.size());

  if (fresh) {
    Vec mean = Vec::Zero(model.input_dim);
    for (int t : train_idx) mean += data.inputs.col(t);
    mean /= n_train;
    Vec var = Vec::Zero(model.input_dim);
    for (int t : train_idx) var += (data.inputs.col(t) - mean).cwiseAbs2();
    var /= std::max(1, n_train - 1);
    model.input_mean = mean;
    model.input_scale = var.cwiseSqrt().cwiseMax(1e-8);
  }

  GradSet grad;
  grad.init_like(model);
  std::vector<GradSet> blocks;
  AdamState adam;
  adam.init_like(model);

  auto eval_subset = [&](const std::vector<int>& idx) {
    GradSet dummy;
    return batch_loss_and_grad(model, data, idx, 0, static_cast<int>(idx.size()), dummy, blocks,
                               false);
  };

  std::vector<Mat> best_w = model.weights;
  std::vector<Vec> best_b = model.biases;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const int batch = std::max(1, cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = n_train - 1; i > 0; --i) {
      int j = static_cast<int>(rng.uniform() * (i + 1));
      std::swap(train_idx[i], train_idx[std::min(j, i)]);
    }
    double epoch_loss = 0.0;
    for (int b = 0; b < n_train; b += batch) {
      const int e = std::min(n_train, b + batch);
      double l = batch_loss_and_grad(model, data, train_idx, b, e, grad, blocks, true);
      epoch_loss += l * (e - b);
      adam.update(model, grad, cfg.learning_rate, 1.0 / (e - b));
    }
    epoch_loss /= n_train;
    double val_loss = n_val > 0 ? eval_subset(val_idx) : epoch_loss;

    res.loss_history.push_back(epoch_loss);
    res.val_history.push_back(val_loss);
    res.best_history.push_back(std::min(val_loss, res.best_history.empty()
                                                      ? val_loss
                                                      : res.best_history.back()));
    res.epochs_run = epoch + 1;

    if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss)) {
      res.diverged = true;
      model.weights = best_w;
      model.biases = best_b;
      return res;
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best_w = model.weights;
      best_b = model.biases;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }
  model.weights = std::move(best_w);
  model.biases = std::move(best_b);
  return res;
}

TrainingDataset generate_training_data(const HamiltonianSystem& sys, int n_starts, int L,
                                       double dt, Rng& rng,
                                       std::shared_ptr<std::atomic<long long>> grad_counter) {
  if (n_starts < 1) throw InvalidArgument("generate_training_data: n_starts must be >= 1");
  if (L < 0) throw InvalidArgument("generate_training_data: L must be >= 0");
  const int d = sys.target.dim;
  const double alpha = sys.mass_scalar;
  GradientProvider gp = exact_gradient_provider(sys, grad_counter);

  TrainingDataset ds;
  ds.inputs.resize(2 * d, static_cast<long>(n_starts) * (L + 1));
  ds.labels.resize(2 * d, static_cast<long>(n_starts) * (L + 1));
  long col = 0;
  for (int s = 0; s < n_starts; ++s) {
    PhaseState st{sys.target.initial_sampler(rng), std::sqrt(alpha) * rng.normal_vector(d)};
    try {
      Vec force = gp.eval(st).dp_dt;
      if (!all_finite(force)) throw IntegrationFailure("bad start", st.q, st.p);
      ds.inputs.col(col).head(d) = st.q;
      ds.inputs.col(col).tail(d) = st.p;
      ds.labels.col(col).head(d) = st.p / alpha;
      ds.labels.col(col).tail(d) = force;
      ++col;
      for (int step = 0; step < L; ++step) {
        st = leapfrog_step_with_force(sys, st, dt, gp, force);
        ds.inputs.col(col).head(d) = st.q;
        ds.inputs.col(col).tail(d) = st.p;
        ds.labels.col(col).head(d) = st.p / alpha;
        ds.labels.col(col).tail(d) = force;
        ++col;
      }
    } catch (const IntegrationFailure&) {
      // truncated trajectory; other starts are unaffected
    }
  }
  ds.inputs.conservativeResize(Eigen::NoChange, col);
  ds.labels.conservativeResize(Eigen::NoChange, col);
  return ds;
}

GradientProvider hnn_gradient_provider(const HnnModel* model,
                                       std::shared_ptr<std::atomic<long long>> counter) {
  GradientProvider gp;
  gp.kind = GradientKind::hnn;
  gp.eval = [model, counter](const PhaseState& s) -> PhaseDerivatives {
    if (counter) counter->fetch_add(1, std::memory_order_relaxed);
    const int d = static_cast<int>(s.q.size());
    Vec x(2 * d);
    x.head(d) = s.q;
    x.tail(d) = s.p;
    HnnGradients g = predict_gradients(*model, x);
    return {std::move(g.dh_dp), -g.dh_dq};
  };
  return gp;
}

// ---------------------------------------------------------------------------
// serialization: explicit little-endian, magic "HNNMDL1\n"

namespace {

constexpr char kMagic[8] = {'H', 'N', 'N', 'M', 'D', 'L', '1', '\n'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

void put_vec(std::ostream& os, const Vec& v) {
  put_u32(os, static_cast<std::uint32_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) put_f64(os, v[i]);
}

Vec get_vec(std::istream& is) {
  std::uint32_t n = get_u32(is);
  Vec v(n);
  for (std::uint32_t i = 0; i < n; ++i) v[i] = get_f64(is);
  return v;
}

}  // namespace

void save_model(const HnnModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_model: cannot open " + path);
  os.write(kMagic, 8);
  put_u32(os, model.version);
  put_u32(os, static_cast<std::uint32_t>(model.activation));
  put_u32(os, static_cast<std::uint32_t>(model.input_dim));
  put_u32(os, static_cast<std::uint32_t>(model.latent_dim));
  put_u32(os, static_cast<std::uint32_t>(model.weights.size()));
  for (size_t l = 0; l < model.weights.size(); ++l) {
    const Mat& W = model.weights[l];
    put_u32(os, static_cast<std::uint32_t>(W.rows()));
    put_u32(os, static_cast<std::uint32_t>(W.cols()));
    for (int j = 0; j < W.cols(); ++j)
      for (int i = 0; i < W.rows(); ++i) put_f64(os, W(i, j));
    put_vec(os, model.biases[l]);
  }
  put_vec(os, model.input_mean);
  put_vec(os, model.input_scale);
  if (!os) throw std::runtime_error("save_model: write failed for " + path);
}

HnnModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_model: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("load_model: not a model file: " + path);
  HnnModel m;
  m.version = get_u32(is);
  if (m.version != 1)
    throw std::runtime_error("load_model: unsupported version " + std::to_string(m.version));
  m.activation = static_cast<Activation>(get_u32(is));
  m.input_dim = static_cast<int>(get_u32(is));
  m.latent_dim = static_cast<int>(get_u32(is));
  std::uint32_t layers = get_u32(is);
  for (std::uint32_t l = 0; l < layers; ++l) {
    std::uint32_t rows = get_u32(is), cols = get_u32(is);
    Mat W(rows, cols);
    for (std::uint32_t j = 0; j < cols; ++j)
      for (std::uint32_t i = 0; i < rows; ++i) W(i, j) = get_f64(is);
    m.weights.push_back(std::move(W));
    m.biases.push_back(get_vec(is));
  }
  m.input_mean = get_vec(is);
  m.input_scale = get_vec(is);
  if (!is) throw std::runtime_error("load_model: truncated file: " + path);
  return m;
}

void export_dataset_csv(const TrainingDataset& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_dataset_csv: cannot open " + path);
  const int d = static_cast<int>(data.inputs.rows()) / 2;
  for (int i = 0; i < d; ++i) os << "q" << i << ",";
  for (int i = 0; i < d; ++i) os << "p" << i << ",";
  for (int i = 0; i < d; ++i) os << "dq" << i << ",";
  for (int i = 0; i < d; ++i) os << "dp" << i << (i + 1 < d ? "," : "\n");
  char buf[32];
  for (int c = 0; c < data.inputs.cols(); ++c) {
    for (int r = 0; r < data.inputs.rows(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g", data.inputs(r, c));
      os << buf << ",";
    }
    for (int r = 0; r < data.labels.rows(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g", data.labels(r, c));
      os << buf << (r + 1 < data.labels.rows() ? "," : "\n");
    }
  }
}

}  // namespace hnnmc
