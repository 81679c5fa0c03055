#pragma once

#include <iosfwd>
#include <string>

#include "optex/milp.hpp"

namespace optex {

enum class ExportFormat { LP, MPS };

struct ExportOptions {
  ExportFormat format = ExportFormat::LP;
  int precision = 17;  // significant digits; >= 9 required
};

/// Serializes the model. LP format uses the Minimize / Subject To / Bounds /
/// Binaries / End sections with every variable normalized to the left of the
/// relation and one bounds line per variable in index order; MPS uses
/// NAME/ROWS/COLUMNS/RHS/BOUNDS/ENDATA with INTORG/INTEND markers around
/// integer columns. Output is deterministic byte-for-byte.
void write_model(const MilpModel& model, const ExportOptions& options, std::ostream& sink);

std::string write_model_string(const MilpModel& model, const ExportOptions& options);

/// Parses a model previously written by write_model (or a compatible file).
/// parse(write(m)) reproduces the same triplets, bounds and integrality.
MilpModel parse_model(std::istream& source, ExportFormat format);

MilpModel parse_model_string(const std::string& text, ExportFormat format);

}  // namespace optex
