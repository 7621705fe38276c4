#pragma once

#include <string>

#include "m2/matrix.hpp"

namespace m2 {

// Column-per-sample feature block tapped from a named model layer.
struct FeatureMatrix {
    std::size_t dim = 0;     // p
    std::size_t samples = 0; // n
    Matrix data;             // p x n
    std::string source_layer;
};

} // namespace m2
