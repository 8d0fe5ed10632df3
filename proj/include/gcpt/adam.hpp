#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace gcpt {

/// Adam state for one parameter matrix, with bias correction.
class AdamState {
public:
    AdamState(Eigen::Index rows, Eigen::Index cols, double beta1 = 0.9, double beta2 = 0.999,
              double eps = 1e-8)
        : m_(Eigen::MatrixXd::Zero(rows, cols)),
          v_(Eigen::MatrixXd::Zero(rows, cols)),
          beta1_(beta1),
          beta2_(beta2),
          eps_(eps) {}

    void step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, double lr) {
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        param.noalias() -=
            (lr / c1) * m_.cwiseQuotient(((v_ / c2).cwiseSqrt().array() + eps_).matrix());
    }

private:
    Eigen::MatrixXd m_, v_;
    long t_ = 0;
    double beta1_, beta2_, eps_;
};

} // namespace gcpt
