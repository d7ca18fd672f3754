#include "fovctl/runlog.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fovctl/errors.hpp"
#include "fovctl/plot.hpp"

namespace fovctl {

int Table::column_index(const std::string& name) const {
    for (size_t c = 0; c < columns.size(); ++c)
        if (columns[c] == name) return static_cast<int>(c);
    return -1;
}

std::vector<double> Table::column(const std::string& name) const {
    const int c = column_index(name);
    if (c < 0) throw validation_error("table has no column '" + name + "'");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[c]);
    return out;
}

namespace {

void write_csv(const std::string& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write '" + path + "'");
    for (size_t c = 0; c < table.columns.size(); ++c)
        out << (c ? "," : "") << table.columns[c];
    out << "\n";
    char buf[32];
    for (const auto& row : table.rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.12g", row[c]);
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
}

}  // namespace

Table read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot read '" + path + "'");
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw validation_error("empty csv '" + path + "'");
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<std::string> emit_outputs(const RunLog& log, const std::string& out_dir, bool plots) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    for (const auto& [group, table] : log.groups) {
        const std::string csv_path = (fs::path(out_dir) / (group + ".csv")).string();
        write_csv(csv_path, table);
        written.push_back(csv_path);
        if (plots && table.columns.size() > 1 && !table.rows.empty()) {
            const std::string svg_path = (fs::path(out_dir) / (group + ".svg")).string();
            write_series_plot(svg_path, group + " (" + log.scenario_name + ")", table);
            written.push_back(svg_path);
        }
    }

    // Compact run metadata; not a data table, so written as JSON by hand.
    const std::string meta_path = (fs::path(out_dir) / "meta.json").string();
    std::ofstream meta(meta_path, std::ios::binary);
    if (!meta) throw validation_error("cannot write '" + meta_path + "'");
    meta << "{\n"
         << "  \"scenario\": \"" << log.scenario_name << "\",\n"
         << "  \"scenario_hash\": \"" << log.scenario_hash << "\",\n"
         << "  \"mode\": \"" << to_string(log.mode) << "\",\n"
         << "  \"seed\": " << log.seed << ",\n"
         << "  \"dt\": " << log.dt << ",\n"
         << "  \"steps\": " << log.summary.steps << ",\n"
         << "  \"completed\": " << (log.summary.completed ? "true" : "false") << ",\n"
         << "  \"containment_ok\": " << (log.summary.containment_ok ? "true" : "false") << ",\n"
         << "  \"final_V\": " << log.summary.final_V << ",\n"
         << "  \"alpha_degeneracies\": " << log.summary.diag.alpha_degeneracies << ",\n"
         << "  \"gain_sign_flips\": " << log.summary.diag.gain_sign_flips << "\n"
         << "}\n";
    written.push_back(meta_path);
    return written;
}

}  // namespace fovctl
