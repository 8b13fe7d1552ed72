#include "harness/report.hpp"

#include <cstdio>

#include "harness/csv.hpp"

namespace harness {

std::string format_fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

std::string distribution_csv(const std::vector<DistributionSummary>& summaries) {
    std::string out = "key,n,mean,median,std,b1,b2,b3,b4\n";
    for (const auto& s : summaries) {
        out += csv_row({s.key, std::to_string(s.n), format_fixed(s.mean), format_fixed(s.median),
                        format_fixed(s.stddev), std::to_string(s.bucket_counts[0]),
                        std::to_string(s.bucket_counts[1]), std::to_string(s.bucket_counts[2]),
                        std::to_string(s.bucket_counts[3])});
    }
    return out;
}

std::string distribution_text_table(const std::vector<DistributionSummary>& summaries,
                                    const std::string& key_label) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({key_label, "n", "mean", "median", "std", "[0,0.25)", "[0.25,0.5)",
                    "[0.5,0.75)", "[0.75,1]"});
    for (const auto& s : summaries) {
        rows.push_back({s.key, std::to_string(s.n), format_fixed(s.mean, 3),
                        format_fixed(s.median, 3), format_fixed(s.stddev, 3),
                        std::to_string(s.bucket_counts[0]), std::to_string(s.bucket_counts[1]),
                        std::to_string(s.bucket_counts[2]), std::to_string(s.bucket_counts[3])});
    }
    std::vector<std::size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const auto& cell = rows[r][c];
            if (c == 0) {
                out += cell + std::string(widths[c] - cell.size(), ' ');
            } else {
                out += std::string(widths[c] - cell.size(), ' ') + cell;
            }
            if (c + 1 < rows[r].size()) out += "  ";
        }
        out += '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c ? 2 : 0);
            out += std::string(total, '-') + '\n';
        }
    }
    return out;
}

}  // namespace harness
