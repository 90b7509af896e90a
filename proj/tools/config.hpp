#pragma once

#include "pertlab/transference.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pertlab::app {

struct ExperimentConfig {
  Regime regime = Regime::T1;
  int d = 2;
  Exponent q{1, 1};
  std::optional<Exponent> p;
  int u_min = 2;
  int u_max = 4;
  Json base;  // set description; dim and seed are filled in from the config
  BigInt radius_cap = pow_big(10, 100);
  std::uint64_t point_budget = 50'000'000;
  std::uint64_t materialize_cap = 2'000'000;
  std::uint64_t seed = 0;

  std::optional<int> certify_u;        // defaults to u_max
  std::optional<std::int64_t> audit_radius;  // defaults to 8·2^u
  std::size_t brute_force_samples = 4;

  Rational epsilon{1, 15};
  std::vector<BigInt> t_values;                // explicit tower radii
  std::vector<std::int64_t> t_multipliers{1, 2, 10};  // of the minimal radius otherwise
  int alpha_min = 1;
  int alpha_max = 5;

  std::vector<std::int64_t> average_N{10, 100, 1000};

  static ExperimentConfig from_json(const Json& j);
  Json to_json() const;
  ConstructionConfig construction() const;
  /// Throws DomainError for parameter combinations outside either regime.
  void validate() const;
};

ExperimentConfig load_config(const std::string& path);

}  // namespace pertlab::app
