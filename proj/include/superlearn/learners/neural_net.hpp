#pragma once

#include <cmath>
#include <limits>

#include "superlearn/learners/model.hpp"
#include "superlearn/linalg.hpp"
#include "superlearn/rng.hpp"

namespace superlearn {

/// Single-hidden-layer tanh network with a linear output unit.
/// Parameter vector layout: W1 (hidden x p, row-major), b1 (hidden), w2 (hidden), b2.
struct NeuralNetShape {
  Index inputs = 1;
  Index hidden = 2;

  Index size() const noexcept { return hidden * inputs + 2 * hidden + 1; }
};

inline Vector neural_net_forward(const NeuralNetShape& shape, const Vector& theta, const Matrix& z) {
  const Index h = shape.hidden;
  const Index p = shape.inputs;
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w1(theta.data(), h, p);
  const auto b1 = theta.segment(h * p, h);
  const auto w2 = theta.segment(h * p + h, h);
  const double b2 = theta(h * p + 2 * h);
  const Matrix act = ((z * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
  return (act * w2).array() + b2;
}

/**
 * Training objective in standardized units:
 *   L = n^-1 sum (f(z_i) - t_i)^2 + decay * (||W1||^2 + ||w2||^2)
 * with its analytic gradient by backpropagation.
 */
class NeuralNetObjective {
 public:
  NeuralNetObjective(NeuralNetShape shape, const Matrix& z, const Vector& target, double decay)
      : shape_(shape), z_(z), target_(target), decay_(decay) {}

  double value(const Vector& theta) const {
    return evaluate(theta, nullptr);
  }

  double value_and_gradient(const Vector& theta, Vector& grad) const { return evaluate(theta, &grad); }

  const NeuralNetShape& shape() const noexcept { return shape_; }

 private:
  double evaluate(const Vector& theta, Vector* grad) const {
    const Index h = shape_.hidden;
    const Index p = shape_.inputs;
    const double n = static_cast<double>(z_.rows());
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w1(theta.data(), h, p);
    const auto b1 = theta.segment(h * p, h);
    const auto w2 = theta.segment(h * p + h, h);
    const double b2 = theta(h * p + 2 * h);
    const Matrix act = ((z_ * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
    const Vector resid = (act * w2).array() + b2 - target_.array();
    const double penalty = decay_ * (w1.squaredNorm() + w2.squaredNorm());
    const double loss = resid.squaredNorm() / n + penalty;
    if (grad != nullptr) {
      grad->resize(shape_.size());
      const Vector dout = (2.0 / n) * resid;
      // delta(i, k) = dout_i * w2_k * (1 - act_ik^2)
      const Matrix delta = (dout * w2.transpose()).array() * (1.0 - act.array().square());
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw1(grad->data(), h, p);
      gw1 = delta.transpose() * z_ + 2.0 * decay_ * w1;
      grad->segment(h * p, h) = delta.colwise().sum().transpose();
      grad->segment(h * p + h, h) = act.transpose() * dout + 2.0 * decay_ * w2;
      (*grad)(h * p + 2 * h) = dout.sum();
    }
    return loss;
  }

  NeuralNetShape shape_;
  const Matrix& z_;
  const Vector& target_;
  double decay_;
};

class NeuralNetModel final : public Model {
 public:
  NeuralNetModel(NeuralNetShape shape, Vector theta, Standardizer standardizer, double y_mean, double y_scale)
      : shape_(shape), theta_(std::move(theta)), st_(std::move(standardizer)), y_mean_(y_mean), y_scale_(y_scale) {}

  Vector predict(const Matrix& x) const override {
    return (neural_net_forward(shape_, theta_, st_.apply(x)).array() * y_scale_) + y_mean_;
  }

  Json params_to_json() const override {
    return Json{{"inputs", shape_.inputs},       {"hidden", shape_.hidden},   {"theta", to_json(theta_)},
                {"x_mean", to_json(st_.mean)},   {"x_scale", to_json(st_.scale)}, {"y_mean", y_mean_},
                {"y_scale", y_scale_}};
  }

  static std::shared_ptr<NeuralNetModel> from_json(const Json& j) {
    const NeuralNetShape shape{j.at("inputs").get<Index>(), j.at("hidden").get<Index>()};
    return std::make_shared<NeuralNetModel>(shape, vector_from_json(j.at("theta")),
                                            Standardizer{vector_from_json(j.at("x_mean")), vector_from_json(j.at("x_scale"))},
                                            j.at("y_mean").get<double>(), j.at("y_scale").get<double>());
  }

  const Vector& theta() const noexcept { return theta_; }

 private:
  NeuralNetShape shape_;
  Vector theta_;
  Standardizer st_;
  double y_mean_;
  double y_scale_;
};

struct NeuralNetFit {
  std::shared_ptr<NeuralNetModel> model;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Full-batch gradient descent with Armijo backtracking. The trial step
/// doubles after each accepted step. Weights start uniform on [-0.7, 0.7].
/// Non-convergence within max_iter is reported, not thrown; the best
/// iterate is kept.
inline NeuralNetFit fit_neural_net(const Matrix& x, const Vector& y, std::size_t hidden, std::size_t max_iter,
                                   double decay, const RngStream& rng) {
  const Standardizer st = Standardizer::fit(x);
  const Matrix z = st.apply(x);
  const double y_mean = y.mean();
  const double n = static_cast<double>(y.size());
  double y_scale = y.size() > 1 ? std::sqrt((y.array() - y_mean).square().sum() / (n - 1.0)) : 0.0;
  if (!(y_scale > 0.0)) y_scale = 1.0;
  const Vector target = (y.array() - y_mean) / y_scale;

  const NeuralNetShape shape{x.cols(), static_cast<Index>(hidden)};
  RandomGenerator gen(rng);
  Vector theta(shape.size());
  for (Index k = 0; k < theta.size(); ++k) theta(k) = gen.uniform(-0.7, 0.7);

  const NeuralNetObjective objective(shape, z, target, decay);
  Vector grad;
  double loss = objective.value_and_gradient(theta, grad);
  Vector best = theta;
  double best_loss = loss;
  double step = 1.0;
  bool converged = false;
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) < 1e-6) {
      converged = true;
      break;
    }
    double trial_loss = std::numeric_limits<double>::infinity();
    Vector trial;
    int halvings = 0;
    for (; halvings < 60; ++halvings) {
      trial = theta - step * grad;
      trial_loss = objective.value(trial);
      if (trial_loss <= loss - 1e-4 * step * gnorm2) break;
      step *= 0.5;
    }
    if (halvings == 60) {
      converged = true;  // no descent possible at machine precision
      break;
    }
    const double previous = loss;
    theta = trial;
    loss = objective.value_and_gradient(theta, grad);
    if (loss < best_loss) {
      best_loss = loss;
      best = theta;
    }
    step *= 2.0;
    if (previous - loss <= 1e-12 * std::max(1.0, previous)) {
      converged = true;
      ++iter;
      break;
    }
  }
  return NeuralNetFit{std::make_shared<NeuralNetModel>(shape, best, st, y_mean, y_scale), converged, iter};
}

}  // namespace superlearn
