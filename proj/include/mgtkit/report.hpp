#ifndef MGTKIT_REPORT_HPP
#define MGTKIT_REPORT_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgtkit {

// Rectangular metric table with rows grouped into blocks (e.g. one block per
// base generator). Markdown rendering bolds each block's per-column minimum.
struct MetricTable {
    std::string corner = "model";
    std::vector<std::string> columns;
    struct Row {
        std::string block;
        std::string label;
        std::vector<std::optional<double>> values;
    };
    std::vector<Row> rows;
    int precision = 3;
};

std::string render_markdown(const MetricTable& table, bool bold_block_minima = true);
std::string render_csv(const MetricTable& table);

// CSV with header 'block,label,<column>...'; empty cells allowed.
MetricTable table_from_csv(std::string_view csv);

} // namespace mgtkit

#endif
