#pragma once

#include <iosfwd>
#include <string>

#include "qla/qlik.hpp"
#include "qla/simulate.hpp"

namespace qla {

// Columns: t, x_1..x_d, y_1..y_m, header row. When rep >= 0 a leading `rep`
// column is emitted (long format).
void write_path_csv(std::ostream& os, const SamplePath& path, long rep = -1, bool header = true);

// Reads the simulate CSV back. Requires strictly increasing, equispaced t
// (relative tolerance 1e-9).
Observations ingest_csv(const std::string& filename);
Observations ingest_csv_stream(std::istream& is, const std::string& name);

// Writes content to `path` atomically (temp file in the same directory, then
// rename).
void atomic_write(const std::string& path, const std::string& content);

}  // namespace qla
