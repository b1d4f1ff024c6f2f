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

#ifndef SGGKIT_CORE_GEOMETRY_H_
#define SGGKIT_CORE_GEOMETRY_H_

#include "core/types.h"

namespace sgg {

// Intersection over union; symmetric, in [0,1], 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

// Smallest box enclosing both.
Box union_box(const Box& a, const Box& b);

double center_distance(const Box& a, const Box& b);

double diagonal(const Box& b);

// Normalized (top, left, bottom, right, width, height, area) for a box
// inside a width x height image. Throws SchemaError on zero image size or a
// box outside the image.
BoxGeometry box_geometry(const Box& b, double width, double height);

}  // namespace sgg

#endif  // SGGKIT_CORE_GEOMETRY_H_
