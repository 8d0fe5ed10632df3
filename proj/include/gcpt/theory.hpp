#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcpt/rng.hpp"

namespace gcpt {

/// Stable softplus h(u) = log(1 + e^u).
double softplus_h(double u);

enum class ClassDistKind { kGaussian, kPointMass };

/// Binary generative process behind the contrastive loss: tokens carry a true
/// Bernoulli parameter theta_x and a fixed embedding z_x; positive/negative
/// classes are drawn from Ber(theta_x) / Ber(1 - theta_x) and class samples
/// from D_0 / D_1 (isotropic Gaussian or point mass at the class mean).
struct GenerativeSpec {
    std::vector<double> thetas;  // one per token
    Eigen::MatrixXd z;           // token embeddings, one row per token
    Eigen::VectorXd mu0, mu1;    // analytic class means
    ClassDistKind dist = ClassDistKind::kGaussian;
    double sigma = 1.0;          // Gaussian scale, ignored for point masses
    double tau = 0.5;
    double gamma = 1.0;  // fixed at 1 in theory mode
    std::int64_t trials = 100000;
    std::uint64_t seed = 42;

    void validate(bool for_bound_checks) const;
};

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::int64_t count = 0;
    bool available() const { return count > 0; }
};

struct BoundReport {
    double tau = 0.0;
    std::int64_t trials = 0;
    Estimate overall;        // L_hat
    Estimate ccl;            // E[g | c+ = c-]
    Estimate icl;            // E[g | c+ != c-]
    Estimate mean_sub_icl;   // E[h(z_x . (mu_{c-} - mu_{c+})) | c+ != c-]
    double collision_rate = 0.0;  // empirical Pr(c+ = c-)
    double c_const = 0.0;         // 2 tau (1 - tau)
    double upper_rhs = 0.0;       // c_const * ccl + icl
    double lower_rhs = 0.0;       // (1 - c_const) * mean_sub_icl
    bool upper_ok = false;
    bool lower_ok = false;
};

/// Runs the Monte-Carlo trials and fills every estimate (bound verdicts are
/// filled by the check functions; simulate leaves them false).
BoundReport simulate(const GenerativeSpec& spec);

/// L_hat <= c * ccl + icl + 3 * pooled SE, with
/// pooled SE = sqrt(se_L^2 + (c * se_ccl)^2 + se_icl^2). Requires both
/// conditional estimates and theta_x >= tau >= 0.5 for every token.
bool check_upper_bound(BoundReport& report, const GenerativeSpec& spec);

/// L_hat >= (1 - c) * mean_sub_icl - 3 * pooled SE, with
/// pooled SE = sqrt(se_L^2 + ((1 - c) * se_mean_sub)^2).
bool check_lower_bound(BoundReport& report, const GenerativeSpec& spec);

/// simulate + both checks.
BoundReport run_bound_check(const GenerativeSpec& spec);

/// Builds a sweep spec for one grid point: num_tokens tokens with theta_x
/// uniform on [tau, 1], fixed N(0, 1/dim) embeddings, Gaussian class
/// distributions with means -+1 per coordinate and unit variance.
GenerativeSpec make_sweep_spec(double tau, int num_tokens, int dim, std::int64_t trials,
                               std::uint64_t seed);

std::string report_to_json(const BoundReport& report);
void write_sweep_csv(const std::vector<BoundReport>& reports, const std::string& path);

} // namespace gcpt
