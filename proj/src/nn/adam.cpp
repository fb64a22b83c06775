#include "breathsense/nn/adam.hpp"

#include <cmath>

#include "breathsense/error.hpp"

namespace breathsense::nn {

template <typename T>
void Adam<T>::step(const std::vector<NamedParam<T>>& params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].param->value.size(), 0.0);
            v_[i].assign(params[i].param->value.size(), 0.0);
        }
    }
    if (params.size() != m_.size()) throw Error(ErrorCode::ShapeMismatch, "Adam parameter list changed between steps");

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param<T>& p = *params[i].param;
        if (p.value.size() != m_[i].size()) throw Error(ErrorCode::ShapeMismatch, "Adam parameter size changed");
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double g = p.grad[k];
            m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
            v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p.value[k] = static_cast<T>(p.value[k] - cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon));
        }
    }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace breathsense::nn
