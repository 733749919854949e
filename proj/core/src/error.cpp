#include "skolr/error.hpp"

namespace skolr {

std::string shape_string(const std::vector<std::size_t>& shape)
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

}  // namespace skolr
