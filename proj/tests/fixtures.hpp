#pragma once

#include <memory>

#include "avdn/episode_synth.hpp"
#include "avdn/synthetic.hpp"

namespace fixture {

inline const avdn::EnvironmentBundle& world() {
  static const avdn::EnvironmentBundle b =
      avdn::generate_synthetic_world({.seed = 7, .size_px = 1024, .meters_per_pixel = 2.0, .object_count = 12});
  return b;
}

inline std::shared_ptr<const avdn::EnvironmentBundle> shared_world() {
  static const auto b = std::make_shared<const avdn::EnvironmentBundle>(world());
  return b;
}

inline const std::vector<avdn::Episode>& corpus() {
  static const std::vector<avdn::Episode> eps = avdn::synthesize_corpus(world(), {}, {}, 100, 40);
  return eps;
}

}  // namespace fixture
