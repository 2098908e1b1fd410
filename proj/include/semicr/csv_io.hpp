#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "semicr/core_data.hpp"

namespace semicr {

// Shortest round-trip decimal form; "Inf"/"-Inf"/"NA" for non-finite values.
std::string format_double(double v);

// Header `id,x1,x2,delta1,delta2,a,z1,...,zp[,weight]`, columns in this order.
// Throws Error(SchemaError) naming the offending column or line, and
// CohortError when a row violates a record invariant.
Cohort parse_cohort_csv(std::istream& in);
Cohort read_cohort_csv(const std::filesystem::path& path);

void write_cohort_csv(std::ostream& out, const Cohort& cohort, bool include_weight = false);

// Opens for writing or throws IoError.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace semicr
