#include "forum_sentinel/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>

#include "forum_sentinel/parallel.hpp"

namespace forum_sentinel {

namespace {

constexpr std::string_view kModelMagic = "forum-sentinel-model 1";

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double positive_weight_for(const Dataset& data, const TrainConfig& config) {
  if (config.class_weight_mode == ClassWeightMode::none) return 1.0;
  return class_weight(data.positives(), data.negatives());
}

}  // namespace

std::string_view to_string(ClassWeightMode m) {
  return m == ClassWeightMode::none ? "none" : "neg_over_pos";
}

ClassWeightMode parse_class_weight_mode(std::string_view s) {
  if (s == "none") return ClassWeightMode::none;
  if (s == "neg_over_pos") return ClassWeightMode::neg_over_pos;
  throw std::invalid_argument("unknown class weight mode '" + std::string(s) + "'");
}

std::string_view to_string(OptimizerKind k) {
  return k == OptimizerKind::lbfgs ? "lbfgs" : "gradient_descent";
}

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "lbfgs") return OptimizerKind::lbfgs;
  if (s == "gradient_descent") return OptimizerKind::gradient_descent;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) {
    throw ModelError("l2_lambda must be a finite nonnegative number");
  }
  if (max_iterations <= 0) throw ModelError("max_iterations must be positive");
  if (!(convergence_tol > 0.0)) throw ModelError("convergence_tol must be positive");
}

double class_weight(std::size_t n_pos, std::size_t n_neg) {
  if (n_pos == 0) throw ModelError("class weight undefined without positive examples");
  return static_cast<double>(n_neg) / static_cast<double>(n_pos);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

MaxentModel MaxentModel::zeros(FeatureSpacePtr space) {
  MaxentModel m;
  m.weights.assign(space->size(), 0.0);
  m.space = std::move(space);
  return m;
}

double MaxentModel::score(const FeatureVector& x) const {
  double s = bias;
  if (x.space == space || x.space->hash() == space->hash()) {
    for (const auto& [i, v] : x.entries) s += weights[i] * v;
    return s;
  }
  for (const auto& [i, v] : x.entries) {
    if (auto j = space->find(x.space->name(i))) s += weights[*j] * v;
  }
  return s;
}

Objective::Objective(const Dataset& data, double l2_lambda, double positive_weight,
                     unsigned jobs)
    : data_(data),
      dims_(data.space->size()),
      l2_(l2_lambda),
      positive_weight_(positive_weight),
      jobs_(jobs) {
  if (data.examples.empty()) throw ModelError("empty dataset");
  for (const Example& e : data.examples) {
    for (const auto& [i, v] : e.features.entries) {
      if (!std::isfinite(v)) throw ModelError("non-finite feature value");
      if (i >= dims_) throw ModelError("feature index outside the feature space");
    }
  }
}

double Objective::evaluate(std::span<const double> theta, std::span<double> grad) const {
  const std::size_t n = data_.examples.size();
  const double bias = theta[dims_];
  std::vector<double> losses(n);
  std::vector<double> residuals(n);
  parallel_for(n, jobs_, [&](std::size_t k) {
    const Example& e = data_.examples[k];
    double s = bias;
    for (const auto& [i, v] : e.features.entries) s += theta[i] * v;
    const bool pos = e.label == Label::intervened;
    const double c = pos ? positive_weight_ : 1.0;
    losses[k] = c * softplus(pos ? -s : s);
    residuals[k] = c * (sigmoid(s) - (pos ? 1.0 : 0.0));
  });

  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = residuals[k];
    if (r == 0.0) continue;
    for (const auto& [i, v] : data_.examples[k].features.entries) grad[i] += r * v;
  }
  double reg = 0.0;
  for (std::size_t j = 0; j < dims_; ++j) {
    grad[j] += l2_ * theta[j];
    reg += theta[j] * theta[j];
  }
  grad[dims_] = pairwise_sum(residuals);
  return pairwise_sum(losses) + 0.5 * l2_ * reg;
}

double Objective::loss(std::span<const double> theta) const {
  std::vector<double> g(dimension());
  return evaluate(theta, g);
}

LossGradient loss_and_gradient(const MaxentModel& model, const Dataset& data,
                               const TrainConfig& config) {
  if (model.space->hash() != data.space->hash()) {
    throw ModelError("dataset and model use different feature spaces");
  }
  const Objective f(data, config.l2_lambda, positive_weight_for(data, config),
                    config.jobs);
  std::vector<double> theta(model.weights);
  theta.push_back(model.bias);
  std::vector<double> grad(theta.size());
  LossGradient out;
  out.loss = f.evaluate(theta, grad);
  out.bias_gradient = grad.back();
  grad.pop_back();
  out.weight_gradient = std::move(grad);
  return out;
}

OptimizeResult minimize_lbfgs(const Objective& f, std::vector<double> theta,
                              int max_iterations, double tolerance,
                              std::size_t memory) {
  const std::size_t d = f.dimension();
  std::vector<double> g(d), g_new(d), dir(d), trial(d);
  double fx = f.evaluate(theta, g);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  OptimizeResult r;
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    if (inf_norm(g) <= tolerance) {
      r.converged = true;
      break;
    }
    // Two-loop recursion.
    dir = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], dir);
      for (std::size_t i = 0; i < d; ++i) dir[i] -= alpha[k] * y_hist[k][i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) {
      gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    } else {
      gamma = 1.0 / std::max(1.0, std::sqrt(dot(g, g)));
    }
    for (double& v : dir) v *= gamma;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], dir);
      for (std::size_t i = 0; i < d; ++i) dir[i] += s_hist[k][i] * (alpha[k] - beta);
    }
    for (double& v : dir) v = -v;

    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      const double scale = 1.0 / std::max(1.0, std::sqrt(dot(g, g)));
      for (std::size_t i = 0; i < d; ++i) dir[i] = -g[i] * scale;
      slope = dot(g, dir);
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = theta[i] + step * dir[i];
      f_new = f.evaluate(trial, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s(d), y(d);
    for (std::size_t i = 0; i < d; ++i) {
      s[i] = trial[i] - theta[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta.swap(trial);
    g.swap(g_new);
    fx = f_new;
  }
  if (!r.converged && inf_norm(g) <= tolerance) r.converged = true;
  r.theta = std::move(theta);
  r.loss = fx;
  r.gradient_norm = inf_norm(g);
  return r;
}

OptimizeResult minimize_gradient_descent(const Objective& f, std::vector<double> theta,
                                         int max_iterations, double tolerance) {
  const std::size_t d = f.dimension();
  std::vector<double> g(d), g_new(d), trial(d);
  double fx = f.evaluate(theta, g);
  double step = 1.0;

  OptimizeResult r;
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    if (inf_norm(g) <= tolerance) {
      r.converged = true;
      break;
    }
    const double gg = dot(g, g);
    bool accepted = false;
    double f_new = 0.0;
    for (int ls = 0; ls < 80; ++ls) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = theta[i] - step * g[i];
      f_new = f.evaluate(trial, g_new);
      // Near the optimum the sufficient-decrease test drowns in rounding, so a
      // non-increasing step that shrinks the gradient is also taken.
      if (std::isfinite(f_new) &&
          (f_new <= fx - 1e-4 * step * gg || (f_new <= fx && inf_norm(g_new) < inf_norm(g)))) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    // Barzilai-Borwein step for the next trial.
    double ss = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double si = trial[i] - theta[i];
      ss += si * si;
      sy += si * (g_new[i] - g[i]);
    }
    theta.swap(trial);
    g.swap(g_new);
    fx = f_new;
    step = sy > 0.0 ? ss / sy : 2.0 * step;
  }
  if (!r.converged && inf_norm(g) <= tolerance) r.converged = true;
  r.theta = std::move(theta);
  r.loss = fx;
  r.gradient_norm = inf_norm(g);
  return r;
}

TrainResult train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  const std::size_t n_pos = data.positives();
  const std::size_t n_neg = data.negatives();
  if (n_pos == 0 || n_neg == 0) {
    throw ModelError("training needs at least one positive and one negative example");
  }
  const double pos_weight = positive_weight_for(data, config);
  const std::size_t dims = data.space->size();

  // Optional RMS scaling, applied to a copy of the data.
  std::vector<double> scale(dims, 1.0);
  Dataset scaled;
  const Dataset* fit_data = &data;
  if (config.standardize) {
    std::vector<double> sq(dims, 0.0);
    for (const Example& e : data.examples) {
      for (const auto& [i, v] : e.features.entries) sq[i] += v * v;
    }
    for (std::size_t j = 0; j < dims; ++j) {
      const double rms = std::sqrt(sq[j] / static_cast<double>(data.examples.size()));
      scale[j] = rms > 0.0 ? rms : 1.0;
    }
    scaled = data;
    for (Example& e : scaled.examples) {
      for (auto& [i, v] : e.features.entries) v /= scale[i];
    }
    fit_data = &scaled;
  }

  const Objective f(*fit_data, config.l2_lambda, pos_weight, config.jobs);
  std::vector<double> theta0(f.dimension(), 0.0);
  OptimizeResult opt =
      config.optimizer == OptimizerKind::lbfgs
          ? minimize_lbfgs(f, std::move(theta0), config.max_iterations,
                           config.convergence_tol)
          : minimize_gradient_descent(f, std::move(theta0), config.max_iterations,
                                      config.convergence_tol);

  TrainResult out;
  out.model = MaxentModel::zeros(data.space);
  for (std::size_t j = 0; j < dims; ++j) out.model.weights[j] = opt.theta[j] / scale[j];
  out.model.bias = opt.theta[dims];
  out.model.config = config;
  out.model.positive_class_weight = pos_weight;
  out.iterations = opt.iterations;
  out.converged = opt.converged;
  out.loss = opt.loss;
  out.gradient_norm = opt.gradient_norm;
  return out;
}

double predict_proba(const MaxentModel& model, const FeatureVector& x) {
  return sigmoid(model.score(x));
}

Label predict(const MaxentModel& model, const FeatureVector& x) {
  return predict_proba(model, x) >= 0.5 ? Label::intervened : Label::not_intervened;
}

std::string serialize_model(const MaxentModel& m) {
  std::ostringstream os;
  os << kModelMagic << '\n';
  os << "l2_lambda " << g17(m.config.l2_lambda) << '\n';
  os << "max_iterations " << m.config.max_iterations << '\n';
  os << "convergence_tol " << g17(m.config.convergence_tol) << '\n';
  os << "class_weight_mode " << to_string(m.config.class_weight_mode) << '\n';
  os << "seed " << m.config.seed << '\n';
  os << "optimizer " << to_string(m.config.optimizer) << '\n';
  os << "standardize " << (m.config.standardize ? 1 : 0) << '\n';
  os << "positive_class_weight " << g17(m.positive_class_weight) << '\n';
  os << "feature_space " << hex64(m.space->hash()) << ' ' << m.space->size() << ' '
     << m.space->provenance() << '\n';
  os << "bias " << g17(m.bias) << '\n';
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    os << "w\t" << m.space->name(j) << '\t' << g17(m.weights[j]) << '\n';
  }
  os << "end\n";
  return os.str();
}

namespace {

class ModelReader {
 public:
  explicit ModelReader(std::string_view text) : text_(text) {}

  // Next line without its newline; throws when the input ends first.
  std::string_view line() {
    line_start_ = pos_;
    const std::size_t nl = text_.find('\n', pos_);
    if (nl == std::string_view::npos) {
      throw ModelError("model file truncated at byte offset " +
                       std::to_string(text_.size()));
    }
    std::string_view out = text_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return out;
  }

  std::string_view value(std::string_view key) {
    std::string_view l = line();
    if (l.substr(0, key.size()) != key || l.size() <= key.size() ||
        l[key.size()] != ' ') {
      fail("expected '" + std::string(key) + "'");
    }
    return l.substr(key.size() + 1);
  }

  double number(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail("bad number '" + std::string(s) + "'");
    }
    return v;
  }

  template <typename Int>
  Int integer(std::string_view s) {
    Int v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail("bad integer '" + std::string(s) + "'");
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ModelError("model file byte offset " + std::to_string(line_start_) + ": " +
                     what);
  }

  bool at_end() const { return pos_ == text_.size(); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
};

}  // namespace

MaxentModel deserialize_model(std::string_view contents) {
  ModelReader in(contents);
  if (in.line() != kModelMagic) in.fail("not a forum-sentinel model file");
  MaxentModel m;
  try {
    m.config.l2_lambda = in.number(in.value("l2_lambda"));
    m.config.max_iterations = in.integer<int>(in.value("max_iterations"));
    m.config.convergence_tol = in.number(in.value("convergence_tol"));
    m.config.class_weight_mode = parse_class_weight_mode(in.value("class_weight_mode"));
    m.config.seed = in.integer<std::uint64_t>(in.value("seed"));
    m.config.optimizer = parse_optimizer(in.value("optimizer"));
    m.config.standardize = in.integer<int>(in.value("standardize")) != 0;
  } catch (const std::invalid_argument& e) {
    in.fail(e.what());
  }
  m.positive_class_weight = in.number(in.value("positive_class_weight"));

  const std::string_view space_line = in.value("feature_space");
  const std::size_t sp1 = space_line.find(' ');
  const std::size_t sp2 = sp1 == std::string_view::npos ? sp1 : space_line.find(' ', sp1 + 1);
  if (sp2 == std::string_view::npos) in.fail("bad feature_space line");
  const std::string hash(space_line.substr(0, sp1));
  const auto dims = in.integer<std::size_t>(space_line.substr(sp1 + 1, sp2 - sp1 - 1));
  const std::string provenance(space_line.substr(sp2 + 1));
  m.bias = in.number(in.value("bias"));

  std::vector<std::string> names;
  names.reserve(dims);
  m.weights.reserve(dims);
  for (std::size_t j = 0; j < dims; ++j) {
    std::string_view l = in.line();
    if (l.substr(0, 2) != "w\t") in.fail("expected a weight line");
    const std::size_t tab = l.rfind('\t');
    if (tab <= 1) in.fail("bad weight line");
    names.emplace_back(l.substr(2, tab - 2));
    m.weights.push_back(in.number(l.substr(tab + 1)));
  }
  if (in.line() != "end") in.fail("expected 'end'");
  if (!in.at_end()) in.fail("trailing data after 'end'");
  try {
    m.space = std::make_shared<const FeatureSpace>(std::move(names), provenance);
  } catch (const FeatureError& e) {
    throw ModelError(std::string("model file: ") + e.what());
  }
  if (hex64(m.space->hash()) != hash) {
    throw ModelError("model file: feature-space hash mismatch");
  }
  return m;
}

void save_model(const MaxentModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write model file " + path.string());
  out << serialize_model(model);
  if (!out) throw ModelError("failed writing model file " + path.string());
}

MaxentModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace forum_sentinel
