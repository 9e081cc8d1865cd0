#pragma once

#include <optional>
#include <string>

#include "fdepth/types.hpp"

namespace fdepth {

// Long-format CSV with header `subject_id,s,value`, one observation per row.
// Rows are grouped by subject and sorted by s within subject. The domain
// defaults to [min s, max s] over the file.
SparseFunctionalDataset load_long_csv(const std::string& path,
                                      std::optional<Interval> domain = std::nullopt);

void write_long_csv(const SparseFunctionalDataset& dataset, const std::string& path);

// DenseCurveMatrix writers. Long format repeats the `subject_id,s,value`
// schema; wide format emits one row per curve with header `subject_id,v1..vG`.
void write_long_csv(const DenseCurveMatrix& curves, const std::vector<std::string>& ids,
                    const std::string& path);
void write_wide_csv(const DenseCurveMatrix& curves, const std::vector<std::string>& ids,
                    const std::string& path);

}  // namespace fdepth
