#pragma once

#include "mn/mesh.hpp"
#include "mn/network.hpp"

namespace mn {

/// Regular sampling grid: `resolution` cubes per axis, resolution + 1 samples.
struct GridSpec {
  int resolution = 64;
  Box domain;
};

/// Table-driven Marching Cubes over the network's samples. Vertices are
/// linearly interpolated on grid edges and shared between neighboring cubes;
/// triangles face toward positive f.
Mesh marching_cubes(const Network& net, const GridSpec& grid);

/// Same, using the network's own domain.
Mesh marching_cubes(const Network& net, int resolution);

}  // namespace mn
