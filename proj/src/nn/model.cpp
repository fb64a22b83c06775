#include "breathsense/nn/model.hpp"

#include <algorithm>

#include "breathsense/error.hpp"

namespace breathsense::nn {

template <typename T>
void Model<T>::check_input(const Tensor<T>& x) const {
    if (x.sample_shape() != input_shape_)
        throw Error(ErrorCode::ShapeMismatch, "model input " + shape_string(x.shape) + " does not match (" +
                                                  std::to_string(input_shape_[0]) + "," + std::to_string(input_shape_[1]) +
                                                  "," + std::to_string(input_shape_[2]) + ")");
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& x, bool training) {
    check_input(x);
    Tensor<T> h = x;
    for (auto& layer : layers_) h = layer->forward(h, training);
    return h;
}

template <typename T>
Tensor<T> Model<T>::backward(const Tensor<T>& grad_output) {
    Tensor<T> g = grad_output;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

template <typename T>
Tensor<T> Model<T>::backward_from_logits(const Tensor<T>& grad_logits) {
    if (layers_.empty() || layers_.back()->kind() != "sigmoid")
        throw Error(ErrorCode::InvalidArgument, "backward_from_logits requires a trailing sigmoid");
    // Sigmoid has no parameters; run a throwaway backward to consume its cache.
    layers_.back()->backward(grad_logits);
    Tensor<T> g = grad_logits;
    for (auto it = std::next(layers_.rbegin()); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

template <typename T>
Tensor<T> Model<T>::predict(const Tensor<T>& x) const {
    check_input(x);
    Tensor<T> h = x;
    for (const auto& layer : layers_) h = layer->apply(h);
    return h;
}

template <typename T>
std::vector<NamedParam<T>> Model<T>::state() {
    std::vector<NamedParam<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        for (auto& p : layers_[i]->state())
            out.push_back({std::to_string(i) + "." + layers_[i]->kind() + "." + p.name, p.param});
    return out;
}

template <typename T>
std::vector<NamedParam<T>> Model<T>::parameters() {
    auto all = state();
    std::erase_if(all, [](const NamedParam<T>& p) { return !p.param->trainable(); });
    return all;
}

template <typename T>
void Model<T>::zero_grad() {
    for (auto& p : parameters()) std::fill(p.param->grad.begin(), p.param->grad.end(), T{0});
}

template <typename T>
std::size_t Model<T>::parameter_count() {
    std::size_t n = 0;
    for (auto& p : parameters()) n += p.param->value.size();
    return n;
}

template class Model<float>;
template class Model<double>;

}  // namespace breathsense::nn
