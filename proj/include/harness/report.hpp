#pragma once

#include <string>
#include <vector>

#include "harness/stats.hpp"

namespace harness {

/// Locale-free fixed-point formatting, 6 fractional digits by default.
std::string format_fixed(double value, int digits = 6);

std::string distribution_csv(const std::vector<DistributionSummary>& summaries);

/// Human-readable aligned table; key_label names the grouping column.
std::string distribution_text_table(const std::vector<DistributionSummary>& summaries,
                                    const std::string& key_label);

}  // namespace harness
