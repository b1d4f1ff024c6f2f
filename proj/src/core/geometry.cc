// Copyright 2026 The sggkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/geometry.h"

#include <algorithm>
#include <cmath>

namespace sgg {

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

Box union_box(const Box& a, const Box& b) {
  return Box{std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
             std::max(a.y2, b.y2)};
}

double center_distance(const Box& a, const Box& b) {
  const double dx = 0.5 * (a.x1 + a.x2) - 0.5 * (b.x1 + b.x2);
  const double dy = 0.5 * (a.y1 + a.y2) - 0.5 * (b.y1 + b.y2);
  return std::hypot(dx, dy);
}

double diagonal(const Box& b) { return std::hypot(b.width(), b.height()); }

BoxGeometry box_geometry(const Box& b, double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw SchemaError("box_geometry: image dimensions must be positive");
  }
  if (!b.valid() || b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > width ||
      b.y2 > height) {
    throw SchemaError("box_geometry: box outside image bounds");
  }
  const double top = b.y1 / height;
  const double left = b.x1 / width;
  const double bottom = b.y2 / height;
  const double right = b.x2 / width;
  const double w = right - left;
  const double h = bottom - top;
  return BoxGeometry{top, left, bottom, right, w, h, w * h};
}

}  // namespace sgg
