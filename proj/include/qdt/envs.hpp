#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qdt {

struct ValueBounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct StepResult {
  // View into the environment's state; valid until the next reset/step.
  std::span<const double> observation;
  double reward = 0.0;
  bool done = false;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual int n_inputs() const = 0;
  virtual int n_actions() const = 0;
  virtual const std::vector<std::string>& action_names() const = 0;

  // Lowest return any policy can collect in one episode; doubles as the
  // penalty fitness for genotypes that fail to decode.
  virtual double worst_return() const = 0;

  // Whether policies should see [0,1]-normalized observations.
  virtual bool wants_normalized_observations() const = 0;
  virtual std::span<const ValueBounds> observation_bounds() const = 0;

  virtual std::span<const double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;

  // Starts an episode at an exact state (for tests and probes).
  virtual void set_state(std::span<const double> state) = 0;

  virtual bool done() const = 0;
  virtual int step_count() const = 0;
  virtual int max_steps() const = 0;
};

enum class EnvId { cartpole, mountaincar };

EnvId parse_env_id(const std::string& name);  // throws on unknown name
std::string env_name(EnvId id);
std::unique_ptr<Environment> make_environment(EnvId id);

// x_hat_i = (x_i - lo_i) / (hi_i - lo_i), componentwise.
void normalize_observation(std::span<const double> raw,
                           std::span<const ValueBounds> bounds,
                           std::span<double> out);

}  // namespace qdt
