#include "aurora/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "aurora/util.hpp"

namespace aurora::policy {

size_t MlpLayout::param_count() const {
  size_t n = 0;
  for (int l = 0; l < layers(); ++l) n += layer_weight_count(l) + static_cast<size_t>(dims[l + 1]);
  return n;
}

size_t MlpLayout::weight_offset(int l) const {
  size_t off = offset;
  for (int i = 0; i < l; ++i) off += layer_weight_count(i) + static_cast<size_t>(dims[i + 1]);
  return off;
}

size_t MlpLayout::bias_offset(int l) const { return weight_offset(l) + layer_weight_count(l); }

void mlp_forward(const MlpLayout& net, std::span<const double> theta, std::span<const double> x,
                 MlpWorkspace& ws) {
  const int L = net.layers();
  if (static_cast<int>(x.size()) != net.dims[0])
    throw std::invalid_argument("mlp_forward: input has length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(net.dims[0]));
  ws.acts.resize(static_cast<size_t>(L) + 1);
  ws.acts[0].assign(x.begin(), x.end());
  for (int l = 0; l < L; ++l) {
    const int in = net.dims[l], out = net.dims[l + 1];
    const double* w = theta.data() + net.weight_offset(l);
    const double* b = theta.data() + net.bias_offset(l);
    const std::vector<double>& a = ws.acts[l];
    std::vector<double>& z = ws.acts[l + 1];
    z.assign(static_cast<size_t>(out), 0.0);
    for (int r = 0; r < out; ++r) {
      double acc = b[r];
      const double* wr = w + static_cast<size_t>(r) * in;
      for (int c = 0; c < in; ++c) acc += wr[c] * a[static_cast<size_t>(c)];
      z[static_cast<size_t>(r)] = (l == L - 1) ? acc : std::tanh(acc);
    }
  }
}

void mlp_backward(const MlpLayout& net, std::span<const double> theta,
                  std::span<const double> d_output, MlpWorkspace& ws, std::span<double> grad) {
  const int L = net.layers();
  ws.dz.assign(d_output.begin(), d_output.end());
  for (int l = L - 1; l >= 0; --l) {
    const int in = net.dims[l], out = net.dims[l + 1];
    if (l != L - 1) {
      const std::vector<double>& a = ws.acts[l + 1];  // tanh outputs
      for (int r = 0; r < out; ++r) ws.dz[static_cast<size_t>(r)] *= 1.0 - a[static_cast<size_t>(r)] * a[static_cast<size_t>(r)];
    }
    const std::vector<double>& a_in = ws.acts[l];
    double* gw = grad.data() + net.weight_offset(l);
    double* gb = grad.data() + net.bias_offset(l);
    for (int r = 0; r < out; ++r) {
      const double d = ws.dz[static_cast<size_t>(r)];
      double* gwr = gw + static_cast<size_t>(r) * in;
      for (int c = 0; c < in; ++c) gwr[c] += d * a_in[static_cast<size_t>(c)];
      gb[r] += d;
    }
    if (l > 0) {
      const double* w = theta.data() + net.weight_offset(l);
      ws.da.assign(static_cast<size_t>(in), 0.0);
      for (int r = 0; r < out; ++r) {
        const double d = ws.dz[static_cast<size_t>(r)];
        const double* wr = w + static_cast<size_t>(r) * in;
        for (int c = 0; c < in; ++c) ws.da[static_cast<size_t>(c)] += wr[c] * d;
      }
      ws.dz = ws.da;
    }
  }
}

namespace {

// Semi-orthogonal rows (or columns when out > in), scaled by gain.
void orthogonal_init(std::span<double> w, int out, int in, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool by_rows = out <= in;
  const int nvec = by_rows ? out : in;
  const int dim = by_rows ? in : out;
  std::vector<std::vector<double>> basis(static_cast<size_t>(nvec));
  for (size_t k = 0; k < basis.size(); ++k) {
    std::vector<double>& v = basis[k];
    while (true) {
      v.resize(static_cast<size_t>(dim));
      for (double& x : v) x = normal(rng);
      // Gram-Schmidt against the accepted vectors.
      for (size_t j = 0; j < k; ++j) {
        const auto& u = basis[j];
        double dot = 0.0;
        for (int i = 0; i < dim; ++i) dot += u[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
        for (int i = 0; i < dim; ++i) v[static_cast<size_t>(i)] -= dot * u[static_cast<size_t>(i)];
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (double& x : v) x /= norm;
        break;
      }
    }
  }
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) {
      double q = by_rows ? basis[static_cast<size_t>(r)][static_cast<size_t>(c)]
                         : basis[static_cast<size_t>(c)][static_cast<size_t>(r)];
      w[static_cast<size_t>(r) * in + c] = gain * q;
    }
}

void init_net(const MlpLayout& net, std::span<double> theta, double out_gain,
              std::mt19937_64& rng) {
  for (int l = 0; l < net.layers(); ++l) {
    const double gain = (l == net.layers() - 1) ? out_gain : 1.0;
    orthogonal_init(theta.subspan(net.weight_offset(l), net.layer_weight_count(l)),
                    net.dims[l + 1], net.dims[l], gain, rng);
    std::fill_n(theta.begin() + static_cast<long>(net.bias_offset(l)), net.dims[l + 1], 0.0);
  }
}

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5*log(2*pi)

}  // namespace

void GaussianPolicy::build_layouts() {
  const int in = 3 * k_;
  mean_.dims = {in, kHidden1, kHidden2, 1};
  mean_.offset = 0;
  value_.dims = mean_.dims;
  value_.offset = mean_.param_count();
  theta_.assign(mean_.param_count() + value_.param_count() + 1, 0.0);
}

GaussianPolicy::GaussianPolicy(int k, uint64_t seed) : k_(k) {
  require(k >= 1, "policy history length k must be >= 1");
  build_layouts();
  auto rng = make_rng(seed, 7);
  init_net(mean_, theta_, 0.01, rng);  // small output gain: start near a = 0
  init_net(value_, theta_, 1.0, rng);
  theta_.back() = kLogStdInit;
}

void GaussianPolicy::set_log_std(double v) {
  theta_.back() = v;
  clamp_log_std();
}

void GaussianPolicy::clamp_log_std() {
  theta_.back() = std::min(std::max(theta_.back(), kLogStdMin), kLogStdMax);
}

double GaussianPolicy::mean(std::span<const double> state, MlpWorkspace& ws) const {
  mlp_forward(mean_, theta_, state, ws);
  return ws.acts.back()[0];
}

double GaussianPolicy::value(std::span<const double> state, MlpWorkspace& ws) const {
  mlp_forward(value_, theta_, state, ws);
  return ws.acts.back()[0];
}

SampleResult GaussianPolicy::sample_action(std::span<const double> state, std::mt19937_64& rng,
                                           MlpWorkspace& ws) const {
  const double mu = mean(state, ws);
  const double sigma = std::exp(log_std());
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a = mu + sigma * normal(rng);
  const double z = (a - mu) / sigma;
  return {a, -0.5 * z * z - log_std() - kHalfLog2Pi};
}

double GaussianPolicy::log_prob(std::span<const double> state, double action,
                                MlpWorkspace& ws) const {
  const double mu = mean(state, ws);
  const double sigma = std::exp(log_std());
  const double z = (action - mu) / sigma;
  return -0.5 * z * z - log_std() - kHalfLog2Pi;
}

double GaussianPolicy::entropy() const { return log_std() + 0.5 + kHalfLog2Pi; }

double GaussianPolicy::log_prob_backward(std::span<const double> state, double action,
                                         MlpWorkspace& ws, std::span<double> grad,
                                         double scale) const {
  const double mu = mean(state, ws);
  const double sigma = std::exp(log_std());
  const double z = (action - mu) / sigma;
  const double logp = -0.5 * z * z - log_std() - kHalfLog2Pi;
  // d logp / d mu = z / sigma, d logp / d log_std = z^2 - 1
  const double d_mu[1] = {scale * z / sigma};
  mlp_backward(mean_, theta_, d_mu, ws, grad);
  grad[log_std_index()] += scale * (z * z - 1.0);
  return logp;
}

double GaussianPolicy::value_backward(std::span<const double> state, MlpWorkspace& ws,
                                      std::span<double> grad, double scale) const {
  mlp_forward(value_, theta_, state, ws);
  const double v = ws.acts.back()[0];
  const double d_out[1] = {scale};
  mlp_backward(value_, theta_, d_out, ws, grad);
  return v;
}

double grad_check(GaussianPolicy& policy, std::span<const double> state, double action) {
  MlpWorkspace ws;
  const size_t n = policy.param_count();
  std::vector<double> g_logp(n, 0.0), g_value(n, 0.0);
  policy.log_prob_backward(state, action, ws, g_logp, 1.0);
  policy.value_backward(state, ws, g_value, 1.0);

  const double h = 1e-5;
  double max_rel = 0.0;
  auto rel = [](double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
  };
  std::vector<double>& theta = policy.params();
  for (size_t i = 0; i < n; ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    const double lp_p = policy.log_prob(state, action, ws);
    const double v_p = policy.value(state, ws);
    theta[i] = saved - h;
    const double lp_m = policy.log_prob(state, action, ws);
    const double v_m = policy.value(state, ws);
    theta[i] = saved;
    max_rel = std::max(max_rel, rel(g_logp[i], (lp_p - lp_m) / (2.0 * h)));
    max_rel = std::max(max_rel, rel(g_value[i], (v_p - v_m) / (2.0 * h)));
  }
  return max_rel;
}

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_net(std::ofstream& out, const char* name, const MlpLayout& net,
               const std::vector<double>& theta) {
  out << "net " << name << "\n";
  out << "dims";
  for (int d : net.dims) out << ' ' << d;
  out << "\n";
  for (int l = 0; l < net.layers(); ++l) {
    out << "w";
    const size_t w0 = net.weight_offset(l);
    for (size_t i = 0; i < net.layer_weight_count(l); ++i) out << ' ' << fmt_real(theta[w0 + i]);
    out << "\n";
    out << "b";
    const size_t b0 = net.bias_offset(l);
    for (int i = 0; i < net.dims[l + 1]; ++i) out << ' ' << fmt_real(theta[b0 + static_cast<size_t>(i)]);
    out << "\n";
  }
}

[[noreturn]] void load_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("policy file " + path + ": " + what);
}

std::vector<std::string> next_tokens(std::ifstream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  std::istringstream ss(line);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

void read_net(std::ifstream& in, const std::string& path, const char* name, const MlpLayout& net,
              std::vector<double>& theta) {
  auto toks = next_tokens(in);
  if (toks.size() != 2 || toks[0] != "net" || toks[1] != name)
    load_fail(path, std::string("missing 'net ") + name + "' section");
  toks = next_tokens(in);
  if (toks.empty() || toks[0] != "dims") load_fail(path, std::string("missing 'dims' for net ") + name);
  if (toks.size() != net.dims.size() + 1) load_fail(path, std::string("dimension mismatch in net ") + name);
  for (size_t i = 0; i < net.dims.size(); ++i)
    if (std::stoi(toks[i + 1]) != net.dims[i])
      load_fail(path, std::string("dimension mismatch in net ") + name);
  for (int l = 0; l < net.layers(); ++l) {
    toks = next_tokens(in);
    if (toks.empty() || toks[0] != "w")
      load_fail(path, std::string("missing 'w' line for layer ") + std::to_string(l) + " of net " + name);
    if (toks.size() != net.layer_weight_count(l) + 1)
      load_fail(path, std::string("wrong weight count in layer ") + std::to_string(l) + " of net " + name);
    const size_t w0 = net.weight_offset(l);
    for (size_t i = 0; i + 1 < toks.size(); ++i) theta[w0 + i] = std::stod(toks[i + 1]);
    toks = next_tokens(in);
    if (toks.empty() || toks[0] != "b")
      load_fail(path, std::string("missing 'b' line for layer ") + std::to_string(l) + " of net " + name);
    if (toks.size() != static_cast<size_t>(net.dims[l + 1]) + 1)
      load_fail(path, std::string("wrong bias count in layer ") + std::to_string(l) + " of net " + name);
    const size_t b0 = net.bias_offset(l);
    for (size_t i = 0; i + 1 < toks.size(); ++i) theta[b0 + i] = std::stod(toks[i + 1]);
  }
}

}  // namespace

void save_params(const GaussianPolicy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open policy file for writing: " + path);
  out << "auroraparams v1\n";
  out << "k " << policy.k() << "\n";
  write_net(out, "mean", policy.mean_layout(), policy.params());
  write_net(out, "value", policy.value_layout(), policy.params());
  out << "logstd " << fmt_real(policy.log_std()) << "\n";
  if (!out) throw std::runtime_error("write failed for policy file: " + path);
}

GaussianPolicy load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy file: " + path);
  auto toks = next_tokens(in);
  if (toks.size() != 2 || toks[0] != "auroraparams") load_fail(path, "missing 'auroraparams' header");
  if (toks[1] != "v1") load_fail(path, "unsupported version '" + toks[1] + "' (reader supports v1)");
  toks = next_tokens(in);
  if (toks.size() != 2 || toks[0] != "k") load_fail(path, "missing 'k' line");
  const int k = std::stoi(toks[1]);
  if (k < 1) load_fail(path, "invalid history length k");

  GaussianPolicy p;
  p.k_ = k;
  p.build_layouts();
  read_net(in, path, "mean", p.mean_, p.theta_);
  read_net(in, path, "value", p.value_, p.theta_);
  toks = next_tokens(in);
  if (toks.size() != 2 || toks[0] != "logstd") load_fail(path, "missing 'logstd' line");
  p.theta_.back() = std::stod(toks[1]);
  if (p.theta_.back() < kLogStdMin || p.theta_.back() > kLogStdMax)
    load_fail(path, "logstd out of range");
  for (double v : p.theta_)
    if (!std::isfinite(v)) load_fail(path, "non-finite parameter value");
  return p;
}

}  // namespace aurora::policy
