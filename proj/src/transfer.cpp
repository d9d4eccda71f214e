#include "riskpred/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace riskpred::transfer {

namespace {

// Dense symmetric positive-definite solve via Cholesky; dimensions here are
// n_features + 1 at most.
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b,
                                   std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (diag <= 0.0) throw std::runtime_error("cholesky_solve: matrix not positive definite");
    const double l = std::sqrt(diag);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / l;
    }
  }
  // forward then back substitution
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
    b[i] = v / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double v = b[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * b[k];
    b[i] = v / a[i * n + i];
  }
  return b;
}

double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
};

Standardizer fit_standardizer(const Dataset& a, const Dataset& b) {
  const std::size_t d = a.n_features();
  const double n = static_cast<double>(a.n_samples() + b.n_samples());
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < a.n_samples(); ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += a.feature(i, j);
  for (std::size_t i = 0; i < b.n_samples(); ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += b.feature(i, j);
  for (auto& v : s.mean) v /= n;
  for (std::size_t i = 0; i < a.n_samples(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = a.feature(i, j) - s.mean[j];
      s.scale[j] += c * c;
    }
  for (std::size_t i = 0; i < b.n_samples(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = b.feature(i, j) - s.mean[j];
      s.scale[j] += c * c;
    }
  for (auto& v : s.scale) {
    v = std::sqrt(v / n);
    if (v == 0.0) v = 1.0;
  }
  return s;
}

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

double DomainClassifier::margin(std::span<const double> x) const {
  double m = c_lr;
  for (std::size_t j = 0; j < w_lr.size(); ++j) m += x[j] * w_lr[j];
  return m;
}

DomainClassifier fit_domain_classifier(const Dataset& source, const Dataset& target,
                                       double lambda) {
  if (source.n_samples() == 0 || target.n_samples() == 0)
    throw std::invalid_argument("fit_domain_classifier: empty dataset");
  if (source.n_features() != target.n_features())
    throw std::invalid_argument("fit_domain_classifier: feature count mismatch");
  if (!(lambda > 0.0))
    throw std::invalid_argument("fit_domain_classifier: lambda must be positive");

  const std::size_t d = source.n_features();
  const std::size_t ns = source.n_samples();
  const std::size_t nt = target.n_samples();
  const std::size_t n = ns + nt;
  const Standardizer std_params = fit_standardizer(source, target);

  // Standardized design matrix, source rows first; label 1 = source.
  std::vector<double> z(n * d);
  std::vector<int> y(n, 0);
  for (std::size_t i = 0; i < ns; ++i) {
    y[i] = 1;
    for (std::size_t j = 0; j < d; ++j)
      z[i * d + j] = (source.feature(i, j) - std_params.mean[j]) / std_params.scale[j];
  }
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < d; ++j)
      z[(ns + i) * d + j] =
          (target.feature(i, j) - std_params.mean[j]) / std_params.scale[j];

  // Newton iterations on theta = (w, c), ridge on w only.
  const std::size_t p = d + 1;
  std::vector<double> theta(p, 0.0);
  std::vector<double> margins(n), prob(n);

  auto objective = [&]() {
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = margins[i];
      obj += std::log1p(std::exp(-std::abs(m))) + std::max(m, 0.0) - (y[i] ? m : 0.0);
    }
    double pen = 0.0;
    for (std::size_t j = 0; j < d; ++j) pen += theta[j] * theta[j];
    return obj + 0.5 * lambda * pen;
  };

  auto compute_margins = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      double m = theta[d];
      const double* zi = z.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) m += zi[j] * theta[j];
      margins[i] = m;
    }
  };

  compute_margins();
  double cur_obj = objective();
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(margins[i]);

    std::vector<double> grad(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = prob[i] - y[i];
      const double* zi = z.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * zi[j];
      grad[d] += r;
    }
    for (std::size_t j = 0; j < d; ++j) grad[j] += lambda * theta[j];

    double ginf = 0.0;
    for (double gv : grad) ginf = std::max(ginf, std::abs(gv));
    if (ginf <= 1e-8) break;

    std::vector<double> hess(p * p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = std::max(prob[i] * (1.0 - prob[i]), 1e-12);
      const double* zi = z.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k <= j; ++k) hess[j * p + k] += r * zi[j] * zi[k];
        hess[d * p + j] += r * zi[j];
      }
      hess[d * p + d] += r;
    }
    for (std::size_t j = 0; j < d; ++j) hess[j * p + j] += lambda;
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = j + 1; k < p; ++k) hess[j * p + k] = hess[k * p + j];

    const std::vector<double> step = cholesky_solve(std::move(hess), grad, p);

    // Backtracking keeps Newton stable on separable data.
    double scale = 1.0;
    const std::vector<double> theta_old = theta;
    for (int half = 0; half < 40; ++half) {
      for (std::size_t j = 0; j < p; ++j) theta[j] = theta_old[j] - scale * step[j];
      compute_margins();
      const double new_obj = objective();
      if (new_obj <= cur_obj + 1e-12) {
        cur_obj = new_obj;
        break;
      }
      scale *= 0.5;
      if (half == 39) {
        theta = theta_old;
        compute_margins();
      }
    }
  }

  // Map back to original feature scale. The intercept is additionally
  // corrected for the source/target size imbalance so that exp(margin)
  // estimates the density ratio P_S(x)/P_T(x) rather than the posterior odds,
  // which absorb the log(N_S/N_T) sampling prior.
  DomainClassifier dc;
  dc.w_lr.resize(d);
  double c = theta[d];
  for (std::size_t j = 0; j < d; ++j) {
    dc.w_lr[j] = theta[j] / std_params.scale[j];
    c -= std_params.mean[j] * theta[j] / std_params.scale[j];
  }
  dc.c_lr = c - std::log(static_cast<double>(ns) / static_cast<double>(nt));
  return dc;
}

GaussianDomainModel fit_gaussian_domain_model(const Dataset& source,
                                              const Dataset& target,
                                              double var_floor) {
  if (source.n_samples() == 0 || target.n_samples() == 0)
    throw std::invalid_argument("fit_gaussian_domain_model: empty dataset");
  if (source.n_features() != target.n_features())
    throw std::invalid_argument("fit_gaussian_domain_model: feature count mismatch");
  if (!(var_floor > 0.0))
    throw std::invalid_argument("fit_gaussian_domain_model: var_floor must be positive");

  const std::size_t d = source.n_features();
  auto moments = [&](const Dataset& ds, std::vector<double>& mu, std::vector<double>& var) {
    mu.assign(d, 0.0);
    var.assign(d, 0.0);
    const double n = static_cast<double>(ds.n_samples());
    for (std::size_t i = 0; i < ds.n_samples(); ++i)
      for (std::size_t j = 0; j < d; ++j) mu[j] += ds.feature(i, j);
    for (auto& v : mu) v /= n;
    for (std::size_t i = 0; i < ds.n_samples(); ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double c = ds.feature(i, j) - mu[j];
        var[j] += c * c;
      }
    for (auto& v : var) v = std::max(v / n, var_floor);
  };

  GaussianDomainModel g;
  moments(source, g.mu_source, g.var_source);
  moments(target, g.mu_target, g.var_target);
  return g;
}

std::vector<double> domain_weights_discriminative(const DomainClassifier& dc,
                                                  const Dataset& source,
                                                  double clip_lo, double clip_hi) {
  if (dc.w_lr.size() != source.n_features())
    throw std::invalid_argument("domain_weights_discriminative: dimension mismatch");
  std::vector<double> w(source.n_samples());
  for (std::size_t i = 0; i < source.n_samples(); ++i)
    w[i] = clip(std::exp(-dc.margin(source.row(i))), clip_lo, clip_hi);
  return w;
}

std::vector<double> domain_weights_gaussian(const GaussianDomainModel& g,
                                            const Dataset& source, double clip_lo,
                                            double clip_hi) {
  const std::size_t d = source.n_features();
  if (g.mu_source.size() != d)
    throw std::invalid_argument("domain_weights_gaussian: dimension mismatch");
  std::vector<double> w(source.n_samples());
  for (std::size_t i = 0; i < source.n_samples(); ++i) {
    double log_ratio = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = source.feature(i, j);
      const double dt = x - g.mu_target[j];
      const double ds = x - g.mu_source[j];
      log_ratio += -0.5 * std::log(g.var_target[j]) - dt * dt / (2.0 * g.var_target[j]) +
                   0.5 * std::log(g.var_source[j]) + ds * ds / (2.0 * g.var_source[j]);
    }
    w[i] = clip(std::exp(log_ratio), clip_lo, clip_hi);
  }
  return w;
}

std::vector<double> task_weights_from_margins(std::span<const double> margins,
                                              std::span<const int> labels) {
  if (margins.size() != labels.size())
    throw std::invalid_argument("task_weights_from_margins: length mismatch");
  double mean_abs = 0.0;
  for (double m : margins) mean_abs += std::abs(m);
  mean_abs /= margins.empty() ? 1.0 : static_cast<double>(margins.size());

  std::vector<double> w(margins.size(), 0.0);
  if (mean_abs == 0.0) return w;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double m = margins[i];
    if (m == 0.0) continue;
    const bool agree = (m > 0.0) == (labels[i] == 1);
    w[i] = (agree ? 1.0 : -1.0) * std::abs(m) / mean_abs;
  }
  return w;
}

std::vector<double> task_weights(const Dataset& source, const Dataset& target,
                                 const gbdt::GbdtConfig& base_cfg) {
  const Dataset combined = Dataset::concat(source, target);
  const gbdt::GbdtModel model = gbdt::fit(combined, base_cfg);
  const std::vector<double> margins = model.predict_margin(source);
  return task_weights_from_margins(margins, source.labels());
}

std::vector<double> hybrid_weights(std::span<const double> w_domain,
                                   std::span<const double> w_task) {
  if (w_domain.size() != w_task.size())
    throw std::invalid_argument("hybrid_weights: length mismatch");
  std::vector<double> w(w_domain.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = std::max(0.0, w_domain[i] + w_task[i]);
  return w;
}

Dataset alpha_mixed_training_set(const Dataset& target, const Dataset& source,
                                 std::span<const double> w_combined, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha_mixed_training_set: alpha must be in [0,1]");
  if (w_combined.size() != source.n_samples())
    throw std::invalid_argument("alpha_mixed_training_set: weights length mismatch");
  if (alpha > 0.0 && target.n_samples() == 0)
    throw std::invalid_argument("alpha_mixed_training_set: alpha > 0 with empty target");
  if (alpha < 1.0 && source.n_samples() == 0)
    throw std::invalid_argument("alpha_mixed_training_set: alpha < 1 with empty source");

  const double n_t = static_cast<double>(target.n_samples());
  const double n_total = n_t + static_cast<double>(source.n_samples());

  double w_sum = 0.0;
  for (double w : w_combined) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("alpha_mixed_training_set: weights must be >= 0");
    w_sum += w;
  }
  if (alpha < 1.0 && w_sum <= 0.0)
    throw std::invalid_argument("alpha_mixed_training_set: source weights sum to zero");

  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(n_total));
  const double target_w = alpha == 0.0 ? 0.0 : alpha * n_total / n_t;
  for (std::size_t i = 0; i < target.n_samples(); ++i) weights.push_back(target_w);
  const double source_scale = alpha == 1.0 ? 0.0 : (1.0 - alpha) * n_total / w_sum;
  for (std::size_t j = 0; j < source.n_samples(); ++j)
    weights.push_back(source_scale * w_combined[j]);

  const Dataset mixed = Dataset::concat(target.with_domain_tag(Domain::kTarget),
                                        source.with_domain_tag(Domain::kSource));
  return mixed.with_weights(std::move(weights));
}

// ---------------------------------------------------------------------------

std::string to_string(TransferMethod m) {
  switch (m) {
    case TransferMethod::kT: return "T";
    case TransferMethod::kS: return "S";
    case TransferMethod::kSUnionT: return "S_UNION_T";
    case TransferMethod::kOnes: return "ONES";
    case TransferMethod::kGaussian: return "GAUSSIAN";
    case TransferMethod::kHybrid: return "HYBRID";
  }
  throw std::logic_error("unknown transfer method");
}

TransferMethod transfer_method_from_string(const std::string& s) {
  if (s == "T") return TransferMethod::kT;
  if (s == "S") return TransferMethod::kS;
  if (s == "S_UNION_T") return TransferMethod::kSUnionT;
  if (s == "ONES") return TransferMethod::kOnes;
  if (s == "GAUSSIAN") return TransferMethod::kGaussian;
  if (s == "HYBRID") return TransferMethod::kHybrid;
  throw std::invalid_argument("unknown transfer method '" + s + "'");
}

void TransferConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("TransferConfig: alpha must be in [0,1]");
  if (!(clip_lo > 0.0 && clip_hi >= clip_lo))
    throw std::invalid_argument("TransferConfig: invalid clip bounds");
  if (!(lr_lambda > 0.0))
    throw std::invalid_argument("TransferConfig: lr_lambda must be positive");
}

SourceWeights compute_source_weights(const Dataset& source, const Dataset& target,
                                     const TransferConfig& cfg,
                                     const gbdt::GbdtConfig& base_cfg) {
  cfg.validate();
  const std::size_t n = source.n_samples();
  SourceWeights out;
  switch (cfg.method) {
    case TransferMethod::kOnes:
      out.w_domain.assign(n, 1.0);
      out.w_task.assign(n, 0.0);
      out.w_combined.assign(n, 1.0);
      out.notes.push_back("all source weights fixed to 1");
      return out;
    case TransferMethod::kGaussian: {
      const GaussianDomainModel g = fit_gaussian_domain_model(source, target);
      out.w_domain = domain_weights_gaussian(g, source, cfg.clip_lo, cfg.clip_hi);
      out.w_task.assign(n, 0.0);
      out.w_combined = out.w_domain;
      out.notes.push_back("gaussian density-ratio weights clipped to [" +
                          std::to_string(cfg.clip_lo) + ", " +
                          std::to_string(cfg.clip_hi) + "]");
      return out;
    }
    case TransferMethod::kHybrid: {
      const DomainClassifier dc = fit_domain_classifier(source, target, cfg.lr_lambda);
      out.w_domain = domain_weights_discriminative(dc, source, cfg.clip_lo, cfg.clip_hi);
      out.w_task = task_weights(source, target, base_cfg);
      out.w_combined = hybrid_weights(out.w_domain, out.w_task);
      std::size_t clipped = 0, zeroed = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (out.w_domain[i] == cfg.clip_lo || out.w_domain[i] == cfg.clip_hi) ++clipped;
        if (out.w_combined[i] == 0.0) ++zeroed;
      }
      out.notes.push_back("discriminative weights clipped to [" +
                          std::to_string(cfg.clip_lo) + ", " +
                          std::to_string(cfg.clip_hi) + "], " + std::to_string(clipped) +
                          " at a bound");
      out.notes.push_back("task weights normalized by the mean absolute margin; " +
                          std::to_string(zeroed) + " combined weights clipped to 0");
      return out;
    }
    default:
      throw std::invalid_argument(
          "compute_source_weights: method '" + to_string(cfg.method) +
          "' does not use source weights");
  }
}

gbdt::GbdtModel fit_transfer_model(const Dataset& source, const Dataset& target,
                                   const TransferConfig& cfg,
                                   const gbdt::GbdtConfig& base_cfg,
                                   const SourceWeights* precomputed) {
  cfg.validate();
  switch (cfg.method) {
    case TransferMethod::kT:
      return gbdt::fit(target, base_cfg);
    case TransferMethod::kS:
      return gbdt::fit(source, base_cfg);
    case TransferMethod::kSUnionT:
      return gbdt::fit(Dataset::concat(source, target), base_cfg);
    default: {
      const SourceWeights weights =
          precomputed ? *precomputed
                      : compute_source_weights(source, target, cfg, base_cfg);
      const Dataset mixed =
          alpha_mixed_training_set(target, source, weights.w_combined, cfg.alpha);
      return gbdt::fit(mixed, base_cfg);
    }
  }
}

void write_weights_csv(const SourceWeights& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_weights_csv: cannot open '" + path + "'");
  out << "sample_index,w_domain,w_task,w_combined\n";
  char buf[160];
  for (std::size_t i = 0; i < w.w_combined.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i,
                  i < w.w_domain.size() ? w.w_domain[i] : 0.0,
                  i < w.w_task.size() ? w.w_task[i] : 0.0, w.w_combined[i]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write_weights_csv: write failed for '" + path + "'");
}

}  // namespace riskpred::transfer
