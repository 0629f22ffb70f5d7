#pragma once

#include <string>

#include "fbmseq/boundary.hpp"
#include "fbmseq/fbm.hpp"
#include "fbmseq/testbench.hpp"
#include "fbmseq/whitening.hpp"

namespace fbmseq {

// All writers format doubles with enough digits to round-trip bit-exactly,
// so identical inputs produce byte-identical artifacts.

std::string to_json(const BoundaryTable& table);
BoundaryTable boundary_from_json(const std::string& text);

std::string to_json(const RiskReport& report);

std::string to_csv(const SamplePath& path);                 // t,value
std::string to_csv(const PosteriorTrajectory& trajectory);  // t,r,a,b,w
std::string boundary_csv(const BoundaryTable& table);       // t,A
std::string outcomes_csv(const std::vector<PathOutcome>& outcomes);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a partial file.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// format is "json" or "csv"; only JSON carries enough metadata to load back.
void save_boundary(const BoundaryTable& table, const std::string& path,
                   const std::string& format = "json");
BoundaryTable load_boundary(const std::string& path);

}  // namespace fbmseq
