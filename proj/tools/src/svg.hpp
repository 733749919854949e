#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skolr/koopman.hpp"

namespace skolr::cli {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Line chart of one or more series sharing axes.
void write_line_svg(const std::filesystem::path& path, const std::string& title, const std::vector<Series>& series);

/// Eigenvalues in the complex plane with the unit circle for reference.
void write_spectrum_svg(const std::filesystem::path& path, const std::vector<SpectrumReport>& reports);

}  // namespace skolr::cli
