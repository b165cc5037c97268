#pragma once

#include "avdn/geometry.hpp"

namespace avdn {

/// A follower attention click, stored in world coordinates together with the
/// view width at click time so it can be re-projected into later views.
struct AttentionClick {
  WorldPoint world_point;
  double width_at_click = 1.0;

  double radius() const { return width_at_click / 10.0; }
  friend bool operator==(const AttentionClick&, const AttentionClick&) = default;
};

}  // namespace avdn
