#pragma once

#include <vector>

#include <Eigen/Dense>

namespace geocell {

// Per-coordinate AdaGrad: accum += g^2; p -= lr * g / (sqrt(accum) + eps).
// Accumulators are non-decreasing; lr = 0 leaves parameters untouched.
struct AdaGrad {
    double learning_rate = 0.045;
    double eps = 1e-8;
    std::vector<Eigen::MatrixXd> accum;

    void step(const std::vector<Eigen::MatrixXd*>& params,
              const std::vector<Eigen::MatrixXd>& grads) {
        if (accum.empty()) {
            for (const auto* p : params) accum.emplace_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            accum[i].array() += grads[i].array().square();
            params[i]->array() -=
                learning_rate * grads[i].array() / (accum[i].array().sqrt() + eps);
        }
    }
};

}  // namespace geocell
