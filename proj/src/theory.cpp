#include "gcpt/theory.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gcpt/error.hpp"

namespace gcpt {

double softplus_h(double u) {
    if (!std::isfinite(u)) {
        throw NumericError("softplus argument is not finite");
    }
    return u <= 0.0 ? std::log1p(std::exp(u)) : u + std::log1p(std::exp(-u));
}

void GenerativeSpec::validate(bool for_bound_checks) const {
    if (thetas.empty() || static_cast<Eigen::Index>(thetas.size()) != z.rows()) {
        throw ConfigError("token thetas and embeddings disagree");
    }
    if (mu0.size() != z.cols() || mu1.size() != z.cols()) {
        throw ConfigError("class means must match the embedding dimension");
    }
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    for (double theta : thetas) {
        if (theta < 0.0 || theta > 1.0) throw ConfigError("theta must lie in [0, 1]");
    }
    if (for_bound_checks) {
        if (tau < 0.5 || tau > 1.0) {
            throw ConfigError("bound checks require tau in [0.5, 1]");
        }
        for (double theta : thetas) {
            if (theta < tau) {
                throw ConfigError("bound checks require theta_x >= tau for every token");
            }
        }
    }
}

namespace {

struct Accumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t count = 0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++count;
    }
    Estimate estimate() const {
        Estimate e;
        e.count = count;
        if (count > 0) {
            e.mean = sum / static_cast<double>(count);
            if (count > 1) {
                const double var =
                    (sum_sq - sum * sum / static_cast<double>(count)) / static_cast<double>(count - 1);
                e.se = std::sqrt(std::max(var, 0.0) / static_cast<double>(count));
            }
        }
        return e;
    }
};

} // namespace

BoundReport simulate(const GenerativeSpec& spec) {
    spec.validate(false);
    Rng rng(derive_seed(spec.seed, "theory"));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Eigen::Index dim = spec.z.cols();

    auto draw_class_sample = [&](int cls) -> Eigen::VectorXd {
        const Eigen::VectorXd& mu = cls == 0 ? spec.mu0 : spec.mu1;
        if (spec.dist == ClassDistKind::kPointMass) {
            return mu;
        }
        Eigen::VectorXd v(dim);
        for (Eigen::Index d = 0; d < dim; ++d) {
            v(d) = mu(d) + spec.sigma * gauss(rng);
        }
        return v;
    };

    Accumulator overall, ccl, icl, mean_sub;
    std::int64_t collisions = 0;

    for (std::int64_t t = 0; t < spec.trials; ++t) {
        const std::size_t x = uniform_index(rng, spec.thetas.size());
        const double theta = spec.thetas[x];
        const int c_pos = uniform_real(rng, 0.0, 1.0) < theta ? 1 : 0;
        const int c_neg = uniform_real(rng, 0.0, 1.0) < 1.0 - theta ? 1 : 0;

        const Eigen::VectorXd m_pos = draw_class_sample(c_pos);
        const Eigen::VectorXd m_neg = draw_class_sample(c_neg);
        const Eigen::VectorXd zx = spec.z.row(static_cast<Eigen::Index>(x)).transpose();

        const double g = softplus_h(zx.dot(m_neg - m_pos) / spec.gamma);
        overall.add(g);
        if (c_pos == c_neg) {
            ++collisions;
            ccl.add(g);
        } else {
            icl.add(g);
            const Eigen::VectorXd& mu_pos = c_pos == 0 ? spec.mu0 : spec.mu1;
            const Eigen::VectorXd& mu_neg = c_neg == 0 ? spec.mu0 : spec.mu1;
            mean_sub.add(softplus_h(zx.dot(mu_neg - mu_pos) / spec.gamma));
        }
    }

    BoundReport report;
    report.tau = spec.tau;
    report.trials = spec.trials;
    report.overall = overall.estimate();
    report.ccl = ccl.estimate();
    report.icl = icl.estimate();
    report.mean_sub_icl = mean_sub.estimate();
    report.collision_rate = static_cast<double>(collisions) / static_cast<double>(spec.trials);
    report.c_const = 2.0 * spec.tau * (1.0 - spec.tau);
    report.upper_rhs = report.c_const * report.ccl.mean + report.icl.mean;
    report.lower_rhs = (1.0 - report.c_const) * report.mean_sub_icl.mean;
    return report;
}

bool check_upper_bound(BoundReport& report, const GenerativeSpec& spec) {
    spec.validate(true);
    if (!report.ccl.available() || !report.icl.available()) {
        throw ConfigError("upper bound check needs both conditional estimates");
    }
    const double pooled = std::sqrt(report.overall.se * report.overall.se +
                                    report.c_const * report.c_const * report.ccl.se * report.ccl.se +
                                    report.icl.se * report.icl.se);
    report.upper_ok = report.overall.mean <= report.upper_rhs + 3.0 * pooled;
    return report.upper_ok;
}

bool check_lower_bound(BoundReport& report, const GenerativeSpec& spec) {
    spec.validate(true);
    if (!report.mean_sub_icl.available()) {
        throw ConfigError("lower bound check needs the mean-substituted estimate");
    }
    const double factor = 1.0 - report.c_const;
    const double pooled = std::sqrt(report.overall.se * report.overall.se +
                                    factor * factor * report.mean_sub_icl.se * report.mean_sub_icl.se);
    report.lower_ok = report.overall.mean >= report.lower_rhs - 3.0 * pooled;
    return report.lower_ok;
}

BoundReport run_bound_check(const GenerativeSpec& spec) {
    BoundReport report = simulate(spec);
    check_upper_bound(report, spec);
    check_lower_bound(report, spec);
    return report;
}

GenerativeSpec make_sweep_spec(double tau, int num_tokens, int dim, std::int64_t trials,
                               std::uint64_t seed) {
    if (num_tokens < 1 || dim < 1) {
        throw ConfigError("sweep spec needs at least one token and one dimension");
    }
    GenerativeSpec spec;
    spec.tau = tau;
    spec.trials = trials;
    spec.seed = seed;
    spec.dist = ClassDistKind::kGaussian;
    spec.sigma = 1.0;
    spec.mu0 = Eigen::VectorXd::Constant(dim, -1.0);
    spec.mu1 = Eigen::VectorXd::Constant(dim, 1.0);

    Rng rng(derive_seed(seed, "sweep_spec"));
    std::normal_distribution<double> gauss(0.0, 1.0);
    spec.thetas.resize(static_cast<std::size_t>(num_tokens));
    spec.z.resize(num_tokens, dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int i = 0; i < num_tokens; ++i) {
        spec.thetas[static_cast<std::size_t>(i)] = uniform_real(rng, tau, 1.0);
        for (int d = 0; d < dim; ++d) {
            spec.z(i, d) = scale * gauss(rng);
        }
    }
    return spec;
}

std::string report_to_json(const BoundReport& report) {
    nlohmann::json j;
    j["tau"] = report.tau;
    j["trials"] = report.trials;
    j["L"] = report.overall.mean;
    j["L_ccl"] = report.ccl.mean;
    j["L_icl"] = report.icl.mean;
    j["se_L"] = report.overall.se;
    j["se_ccl"] = report.ccl.se;
    j["se_icl"] = report.icl.se;
    j["se_mean_sub"] = report.mean_sub_icl.se;
    j["collision_rate"] = report.collision_rate;
    j["c_const"] = report.c_const;
    j["upper_rhs"] = report.upper_rhs;
    j["lower_rhs"] = report.lower_rhs;
    j["upper_ok"] = report.upper_ok;
    j["lower_ok"] = report.lower_ok;
    return j.dump(2);
}

void write_sweep_csv(const std::vector<BoundReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write sweep file: " + path);
    }
    out << "tau,trials,L,L_ccl,L_icl,se_L,se_ccl,se_icl,collision_rate,c_const,"
           "upper_rhs,lower_rhs,upper_ok,lower_ok\n";
    std::ostringstream row;
    for (const auto& r : reports) {
        row.str("");
        row << r.tau << ',' << r.trials << ',' << r.overall.mean << ',' << r.ccl.mean << ','
            << r.icl.mean << ',' << r.overall.se << ',' << r.ccl.se << ',' << r.icl.se << ','
            << r.collision_rate << ',' << r.c_const << ',' << r.upper_rhs << ',' << r.lower_rhs
            << ',' << (r.upper_ok ? 1 : 0) << ',' << (r.lower_ok ? 1 : 0) << '\n';
        out << row.str();
    }
}

} // namespace gcpt
