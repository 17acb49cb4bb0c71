#include "mgtkit/report.hpp"
#include "mgtkit/errors.hpp"
#include "mgtkit/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace mgtkit {

namespace {

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

// rows belonging to each (block, column) minimum, ties included
std::vector<std::vector<bool>> block_minima(const MetricTable& table) {
    std::vector<std::vector<bool>> is_min(table.rows.size(),
                                          std::vector<bool>(table.columns.size(), false));
    std::set<std::string> blocks;
    for (const auto& row : table.rows) blocks.insert(row.block);
    for (const std::string& block : blocks) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& row : table.rows)
                if (row.block == block && row.values[c])
                    best = std::min(best, *row.values[c]);
            if (!std::isfinite(best)) continue;
            for (std::size_t r = 0; r < table.rows.size(); ++r)
                if (table.rows[r].block == block && table.rows[r].values[c] &&
                    *table.rows[r].values[c] == best)
                    is_min[r][c] = true;
        }
    }
    return is_min;
}

} // namespace

std::string render_markdown(const MetricTable& table, bool bold_block_minima) {
    for (const auto& row : table.rows)
        if (row.values.size() != table.columns.size())
            throw SchemaError("metric table: row '" + row.label + "' width mismatch");
    std::vector<std::vector<bool>> bold =
        bold_block_minima ? block_minima(table)
                          : std::vector<std::vector<bool>>(
                                table.rows.size(), std::vector<bool>(table.columns.size(), false));
    std::string out = "| " + table.corner;
    for (const std::string& c : table.columns) out += " | " + c;
    out += " |\n|";
    for (std::size_t c = 0; c <= table.columns.size(); ++c) out += " --- |";
    out += '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out += "| " + table.rows[r].label;
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            out += " | ";
            if (!table.rows[r].values[c]) continue;
            std::string cell = fixed(*table.rows[r].values[c], table.precision);
            out += bold[r][c] ? "**" + cell + "**" : cell;
        }
        out += " |\n";
    }
    return out;
}

std::string render_csv(const MetricTable& table) {
    std::string out = "block,label";
    for (const std::string& c : table.columns) out += "," + c;
    out += '\n';
    for (const auto& row : table.rows) {
        out += row.block + "," + row.label;
        for (const auto& v : row.values) {
            out += ',';
            if (v) out += fmt_double(*v);
        }
        out += '\n';
    }
    return out;
}

MetricTable table_from_csv(std::string_view csv) {
    std::vector<std::string> lines = split(csv, '\n');
    if (lines.empty() || trim(lines[0]).empty())
        throw SchemaError("metric table CSV: missing header");
    std::vector<std::string> header = split(std::string(trim(lines[0])), ',');
    if (header.size() < 3 || header[0] != "block" || header[1] != "label")
        throw SchemaError("metric table CSV: expected header 'block,label,<columns...>'");
    MetricTable table;
    table.columns.assign(header.begin() + 2, header.end());
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (trim(lines[ln]).empty()) continue;
        std::vector<std::string> cells = split(std::string(trim(lines[ln])), ',');
        if (cells.size() != header.size())
            throw ParseError("metric table CSV line " + std::to_string(ln + 1) + ": wrong cell count");
        MetricTable::Row row;
        row.block = cells[0];
        row.label = cells[1];
        for (std::size_t c = 2; c < cells.size(); ++c) {
            if (cells[c].empty())
                row.values.push_back(std::nullopt);
            else
                row.values.push_back(parse_double(cells[c], "metric table CSV line " + std::to_string(ln + 1)));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace mgtkit
