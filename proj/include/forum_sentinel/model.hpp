#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "forum_sentinel/features.hpp"

namespace forum_sentinel {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ClassWeightMode { none, neg_over_pos };
enum class OptimizerKind { lbfgs, gradient_descent };

std::string_view to_string(ClassWeightMode m);
ClassWeightMode parse_class_weight_mode(std::string_view s);
std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct TrainConfig {
  double l2_lambda = 1e-4;
  int max_iterations = 500;
  /// Stop once the gradient infinity-norm is at or below this.
  double convergence_tol = 1e-6;
  ClassWeightMode class_weight_mode = ClassWeightMode::neg_over_pos;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::lbfgs;
  /// Scale each feature by its root-mean-square over the training set
  /// during optimization. Weights are mapped back to raw feature units.
  bool standardize = false;
  /// Worker threads for per-example scoring. Results do not depend on it.
  unsigned jobs = 1;

  /// Throws ModelError when a field is out of range.
  void validate() const;
};

/// n_neg / n_pos. Throws ModelError when n_pos is zero.
double class_weight(std::size_t n_pos, std::size_t n_neg);

struct MaxentModel {
  FeatureSpacePtr space;
  std::vector<double> weights;  // aligned with space->names()
  double bias = 0.0;
  TrainConfig config;
  double positive_class_weight = 1.0;

  static MaxentModel zeros(FeatureSpacePtr space);
  double score(const FeatureVector& x) const;
};

/// Weighted negative log-likelihood plus (lambda/2)||w||^2 over a dataset.
/// Parameters are packed as [weights..., bias]; the bias is not regularized.
class Objective {
 public:
  Objective(const Dataset& data, double l2_lambda, double positive_weight,
            unsigned jobs = 1);

  std::size_t dimension() const { return dims_ + 1; }
  /// Returns the loss and writes the gradient into `grad`.
  double evaluate(std::span<const double> theta, std::span<double> grad) const;
  double loss(std::span<const double> theta) const;

 private:
  const Dataset& data_;
  std::size_t dims_;
  double l2_;
  double positive_weight_;
  unsigned jobs_;
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> weight_gradient;
  double bias_gradient = 0.0;
};

/// Loss and exact gradient of `model` on `data`, using the class weight
/// implied by config.class_weight_mode and the dataset's label counts.
LossGradient loss_and_gradient(const MaxentModel& model, const Dataset& data,
                               const TrainConfig& config);

struct OptimizeResult {
  std::vector<double> theta;
  int iterations = 0;
  bool converged = false;
  double loss = 0.0;
  double gradient_norm = 0.0;  // infinity norm
};

/// Limited-memory BFGS with a backtracking Armijo line search.
OptimizeResult minimize_lbfgs(const Objective& f, std::vector<double> theta0,
                              int max_iterations, double tolerance,
                              std::size_t memory = 10);
/// Steepest descent with an adaptive backtracking Armijo step.
OptimizeResult minimize_gradient_descent(const Objective& f,
                                         std::vector<double> theta0,
                                         int max_iterations, double tolerance);

struct TrainResult {
  MaxentModel model;
  int iterations = 0;
  bool converged = false;
  double loss = 0.0;
  double gradient_norm = 0.0;
};

/// Fits a class-weighted maximum-entropy classifier. Needs at least one
/// example of each class. Deterministic for identical inputs.
TrainResult train(const Dataset& data, const TrainConfig& config);

double sigmoid(double z);
double predict_proba(const MaxentModel& model, const FeatureVector& x);
/// intervened iff predict_proba >= 0.5.
Label predict(const MaxentModel& model, const FeatureVector& x);

/// Text format documented in docs/model-format.md. Weights are written with
/// 17 significant digits so a save/load round trip is exact.
std::string serialize_model(const MaxentModel& model);
MaxentModel deserialize_model(std::string_view contents);
void save_model(const MaxentModel& model, const std::filesystem::path& path);
MaxentModel load_model(const std::filesystem::path& path);

/// Sum of values by pairwise (tree) reduction in index order.
double pairwise_sum(std::span<const double> values);

}  // namespace forum_sentinel
