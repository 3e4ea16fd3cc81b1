#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace aurora::policy {

inline constexpr double kLogStdInit = -0.5;
inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr int kHidden1 = 32;
inline constexpr int kHidden2 = 16;

// Placement of one fully-connected net inside a flat parameter vector.
// Per layer: row-major weights (out x in) followed by biases.
struct MlpLayout {
  std::vector<int> dims;
  size_t offset = 0;

  int layers() const { return static_cast<int>(dims.size()) - 1; }
  size_t layer_weight_count(int l) const {
    return static_cast<size_t>(dims[l + 1]) * static_cast<size_t>(dims[l]);
  }
  size_t param_count() const;
  size_t weight_offset(int l) const;  // absolute index into the flat vector
  size_t bias_offset(int l) const;
};

// Scratch activations; reusable across calls to avoid allocation.
struct MlpWorkspace {
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[L] = output
  std::vector<double> dz, da;
};

// Affine + tanh hidden layers, identity output.
void mlp_forward(const MlpLayout& net, std::span<const double> theta, std::span<const double> x,
                 MlpWorkspace& ws);

// Backpropagates dL/d(output) through the cached forward pass, accumulating
// dL/dtheta into grad (same layout as theta).
void mlp_backward(const MlpLayout& net, std::span<const double> theta,
                  std::span<const double> d_output, MlpWorkspace& ws, std::span<double> grad);

struct SampleResult {
  double action = 0.0;
  double log_prob = 0.0;
};

// Stochastic policy: a state-independent-variance Gaussian over the scalar
// rate action, mean from one 32->16 tanh net, plus a separate value net of
// the same shape.
class GaussianPolicy {
 public:
  // Random orthogonal-like init; input dimension 3k.
  GaussianPolicy(int k, uint64_t seed);

  int k() const { return k_; }
  int input_dim() const { return 3 * k_; }
  size_t param_count() const { return theta_.size(); }

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }
  double log_std() const { return theta_.back(); }
  void set_log_std(double v);
  // Keeps log_std inside its documented range; call after every update.
  void clamp_log_std();

  const MlpLayout& mean_layout() const { return mean_; }
  const MlpLayout& value_layout() const { return value_; }
  size_t log_std_index() const { return theta_.size() - 1; }

  double mean(std::span<const double> state, MlpWorkspace& ws) const;
  double value(std::span<const double> state, MlpWorkspace& ws) const;

  SampleResult sample_action(std::span<const double> state, std::mt19937_64& rng,
                             MlpWorkspace& ws) const;
  double log_prob(std::span<const double> state, double action, MlpWorkspace& ws) const;
  double entropy() const;

  // Accumulate scale * d(log_prob)/dtheta into grad; returns log_prob.
  double log_prob_backward(std::span<const double> state, double action, MlpWorkspace& ws,
                           std::span<double> grad, double scale) const;
  // Accumulate scale * d(value)/dtheta into grad; returns the value.
  double value_backward(std::span<const double> state, MlpWorkspace& ws, std::span<double> grad,
                        double scale) const;

 private:
  GaussianPolicy() = default;
  friend GaussianPolicy load_params(const std::string& path);

  void build_layouts();

  int k_ = 1;
  MlpLayout mean_, value_;
  std::vector<double> theta_;  // [mean | value | log_std]
};

// Analytic gradients of log_prob and value against central finite
// differences (step 1e-5) over every parameter; returns the max relative
// error.
double grad_check(GaussianPolicy& policy, std::span<const double> state, double action);

// Versioned line-oriented text format; reals carry 17 significant digits so
// the round trip is bit-exact.
void save_params(const GaussianPolicy& policy, const std::string& path);
GaussianPolicy load_params(const std::string& path);

}  // namespace aurora::policy
