#include "qdt/envs.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qdt/rng.hpp"

namespace qdt {

// Reference dynamics constants (classic Gym CartPole-v1 / MountainCar-v0):
//
//   cart pole     gravity 9.8, cart mass 1.0, pole mass 0.1, half-pole
//                 length 0.5, force +-10 N, Euler step tau = 0.02 s,
//                 fails at |theta| > 12 deg or |x| > 2.4 m, 500-step cap,
//                 reset draws all four state variables U[-0.05, 0.05]
//
//   mountain car  force 0.001, gravity term 0.0025*cos(3x), position
//                 [-1.2, 0.6], velocity [-0.07, 0.07], goal x >= 0.5,
//                 200-step cap, reset position U[-0.6, -0.4], velocity 0

namespace {

class CartPole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kTotalMass = kCartMass + kPoleMass;
  static constexpr double kHalfPoleLength = 0.5;
  static constexpr double kPoleMassLength = kPoleMass * kHalfPoleLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaLimit = 12.0 * 2.0 * std::numbers::pi / 360.0;
  static constexpr double kXLimit = 2.4;
  static constexpr int kMaxSteps = 500;

  int n_inputs() const override { return 4; }
  int n_actions() const override { return 2; }

  const std::vector<std::string>& action_names() const override {
    static const std::vector<std::string> names{"Push Left", "Push Right"};
    return names;
  }

  double worst_return() const override { return 0.0; }
  bool wants_normalized_observations() const override { return false; }
  std::span<const ValueBounds> observation_bounds() const override {
    return {};
  }

  std::span<const double> reset(std::uint64_t seed) override {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (double& v : s_) v = u(rng);
    steps_ = 0;
    done_ = false;
    return {s_, 4};
  }

  void set_state(std::span<const double> state) override {
    assert(state.size() == 4);
    std::copy(state.begin(), state.end(), s_);
    steps_ = 0;
    done_ = false;
  }

  StepResult step(int action) override {
    assert(!done_ && action >= 0 && action < 2);
    const double force = action == 1 ? kForceMag : -kForceMag;
    const double cos_t = std::cos(s_[2]);
    const double sin_t = std::sin(s_[2]);
    const double temp =
        (force + kPoleMassLength * s_[3] * s_[3] * sin_t) / kTotalMass;
    const double theta_acc =
        (kGravity * sin_t - cos_t * temp) /
        (kHalfPoleLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;
    s_[0] += kTau * s_[1];
    s_[1] += kTau * x_acc;
    s_[2] += kTau * s_[3];
    s_[3] += kTau * theta_acc;
    ++steps_;
    done_ = std::abs(s_[0]) > kXLimit || std::abs(s_[2]) > kThetaLimit ||
            steps_ >= kMaxSteps;
    return {{s_, 4}, 1.0, done_};
  }

  bool done() const override { return done_; }
  int step_count() const override { return steps_; }
  int max_steps() const override { return kMaxSteps; }

 private:
  double s_[4] = {0, 0, 0, 0};  // x, x_dot, theta, theta_dot
  int steps_ = 0;
  bool done_ = true;
};

class MountainCar final : public Environment {
 public:
  static constexpr double kMinPos = -1.2;
  static constexpr double kMaxPos = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPos = 0.5;
  static constexpr double kForce = 0.001;
  static constexpr double kGravity = 0.0025;
  static constexpr int kMaxSteps = 200;

  int n_inputs() const override { return 2; }
  int n_actions() const override { return 3; }

  const std::vector<std::string>& action_names() const override {
    static const std::vector<std::string> names{
        "Accelerate Left", "Not Accelerate", "Accelerate Right"};
    return names;
  }

  double worst_return() const override { return -200.0; }
  bool wants_normalized_observations() const override { return true; }

  std::span<const ValueBounds> observation_bounds() const override {
    static const ValueBounds bounds[2] = {{kMinPos, kMaxPos},
                                          {-kMaxSpeed, kMaxSpeed}};
    return {bounds, 2};
  }

  std::span<const double> reset(std::uint64_t seed) override {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-0.6, -0.4);
    s_[0] = u(rng);
    s_[1] = 0.0;
    steps_ = 0;
    done_ = false;
    return {s_, 2};
  }

  void set_state(std::span<const double> state) override {
    assert(state.size() == 2);
    s_[0] = state[0];
    s_[1] = state[1];
    steps_ = 0;
    done_ = false;
  }

  StepResult step(int action) override {
    assert(!done_ && action >= 0 && action < 3);
    s_[1] += (action - 1) * kForce - kGravity * std::cos(3.0 * s_[0]);
    s_[1] = std::clamp(s_[1], -kMaxSpeed, kMaxSpeed);
    s_[0] += s_[1];
    s_[0] = std::clamp(s_[0], kMinPos, kMaxPos);
    if (s_[0] == kMinPos && s_[1] < 0.0) s_[1] = 0.0;  // inelastic left wall
    ++steps_;
    done_ = s_[0] >= kGoalPos || steps_ >= kMaxSteps;
    return {{s_, 2}, -1.0, done_};
  }

  bool done() const override { return done_; }
  int step_count() const override { return steps_; }
  int max_steps() const override { return kMaxSteps; }

 private:
  double s_[2] = {0, 0};  // position, velocity
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace

EnvId parse_env_id(const std::string& name) {
  if (name == "cartpole") return EnvId::cartpole;
  if (name == "mountaincar") return EnvId::mountaincar;
  throw std::invalid_argument("unknown environment: " + name);
}

std::string env_name(EnvId id) {
  return id == EnvId::cartpole ? "cartpole" : "mountaincar";
}

std::unique_ptr<Environment> make_environment(EnvId id) {
  if (id == EnvId::cartpole) return std::make_unique<CartPole>();
  return std::make_unique<MountainCar>();
}

void normalize_observation(std::span<const double> raw,
                           std::span<const ValueBounds> bounds,
                           std::span<double> out) {
  assert(raw.size() == bounds.size() && out.size() == raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    assert(bounds[i].lo < bounds[i].hi);
    out[i] = (raw[i] - bounds[i].lo) / (bounds[i].hi - bounds[i].lo);
  }
}

}  // namespace qdt
