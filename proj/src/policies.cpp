#include "safecor/policies.hpp"

#include <stdexcept>

#include "safecor/rng.hpp"

namespace safecor {

namespace {

class GreedyPolicy final : public Policy {
 public:
  GreedyPolicy(Eigen::VectorXd q_goal, double saturation)
      : q_goal_(std::move(q_goal)), saturation_(saturation) {
    if (saturation_ <= 0.0) {
      throw std::invalid_argument("make_greedy: saturation must be positive");
    }
  }

  Action act(const Observation& obs) override {
    if (obs.q.size() != q_goal_.size()) {
      throw std::invalid_argument("greedy policy: observation dof mismatch");
    }
    Action a;
    const Eigen::VectorXd err = q_goal_ - obs.q;
    const double n = err.norm();
    a.joint_delta = n <= saturation_ ? err : Eigen::VectorXd(saturation_ * err / n);
    return a;
  }

 private:
  Eigen::VectorXd q_goal_;
  double saturation_;
};

class WaypointPolicy final : public Policy {
 public:
  WaypointPolicy(std::vector<Eigen::VectorXd> targets, double saturation, double advance_tol)
      : targets_(std::move(targets)), saturation_(saturation), advance_tol_(advance_tol) {
    if (targets_.empty()) {
      throw std::invalid_argument("make_waypoint: need at least one target");
    }
    if (saturation_ <= 0.0 || advance_tol_ <= 0.0) {
      throw std::invalid_argument("make_waypoint: saturation and advance_tol must be positive");
    }
  }

  Action act(const Observation& obs) override {
    if (obs.q.size() != targets_.front().size()) {
      throw std::invalid_argument("waypoint policy: observation dof mismatch");
    }
    while (index_ + 1 < targets_.size() && (targets_[index_] - obs.q).norm() < advance_tol_) {
      ++index_;
    }
    Action a;
    const Eigen::VectorXd err = targets_[index_] - obs.q;
    const double n = err.norm();
    a.joint_delta = n <= saturation_ ? err : Eigen::VectorXd(saturation_ * err / n);
    return a;
  }

  void reset(uint64_t) override { index_ = 0; }

 private:
  std::vector<Eigen::VectorXd> targets_;
  double saturation_;
  double advance_tol_;
  size_t index_ = 0;
};

class ReplayPolicy final : public Policy {
 public:
  explicit ReplayPolicy(std::vector<Eigen::VectorXd> trace) : trace_(std::move(trace)) {}

  Action act(const Observation& obs) override {
    Action a;
    if (index_ < trace_.size()) {
      a.joint_delta = trace_[index_++];
      if (a.joint_delta.size() != obs.q.size()) {
        throw std::invalid_argument("replay policy: trace entry dof mismatch");
      }
    } else {
      a.joint_delta = Eigen::VectorXd::Zero(obs.q.size());
    }
    return a;
  }

  void reset(uint64_t) override { index_ = 0; }

 private:
  std::vector<Eigen::VectorXd> trace_;
  size_t index_ = 0;
};

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(int dof, uint64_t seed, double magnitude)
      : dof_(dof), base_seed_(seed), magnitude_(magnitude), rng_(seed) {}

  Action act(const Observation&) override {
    Action a;
    a.joint_delta.resize(dof_);
    for (int i = 0; i < dof_; ++i) {
      a.joint_delta[i] = rng_.uniform(-magnitude_, magnitude_);
    }
    return a;
  }

  void reset(uint64_t seed) override { rng_ = Rng(Rng::mix(base_seed_, seed)); }

 private:
  int dof_;
  uint64_t base_seed_;
  double magnitude_;
  Rng rng_;
};

}  // namespace

std::unique_ptr<Policy> make_greedy(const Eigen::VectorXd& q_goal, double saturation) {
  return std::make_unique<GreedyPolicy>(q_goal, saturation);
}

std::unique_ptr<Policy> make_waypoint(std::vector<Eigen::VectorXd> targets, double saturation,
                                      double advance_tol) {
  return std::make_unique<WaypointPolicy>(std::move(targets), saturation, advance_tol);
}

std::unique_ptr<Policy> make_replay(std::vector<Eigen::VectorXd> trace) {
  return std::make_unique<ReplayPolicy>(std::move(trace));
}

std::unique_ptr<Policy> make_random(int dof, uint64_t seed, double magnitude) {
  return std::make_unique<RandomPolicy>(dof, seed, magnitude);
}

}  // namespace safecor
