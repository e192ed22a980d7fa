#pragma once

#include <stdexcept>
#include <string>

namespace ringopt {

// Input outside the domain of a model (non-positive headway, speed above
// the desired speed, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Two vehicles overlap: some headway became non-positive.
class CollisionError : public std::runtime_error {
 public:
  CollisionError(const std::string& what, long step, int vehicle)
      : std::runtime_error(what), step_(step), vehicle_(vehicle) {}

  long step() const { return step_; }
  int vehicle() const { return vehicle_; }

 private:
  long step_;
  int vehicle_;
};

}  // namespace ringopt
