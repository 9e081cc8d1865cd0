#include "fdepth/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

namespace fdepth {

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

SparseFunctionalDataset load_long_csv(const std::string& path, std::optional<Interval> domain) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    // Tolerate a UTF-8 BOM and trailing CR.
    if (line.size() >= 3 && line.compare(0, 3, "\xef\xbb\xbf") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        auto header = split_csv_row(line);
        if (header.size() != 3 || header[0] != "subject_id" || header[1] != "s" ||
            header[2] != "value")
            throw std::runtime_error(path + ": expected header subject_id,s,value");
    }

    // Preserve first-appearance order of subjects.
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> by_subject;
    std::size_t line_no = 1;
    bool any_row = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_row(line);
        if (fields.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 3 fields, got " + std::to_string(fields.size()));
        double s, v;
        try {
            std::size_t pos;
            s = std::stod(fields[1], &pos);
            if (pos != fields[1].size()) throw std::invalid_argument("trailing characters");
            v = std::stod(fields[2], &pos);
            if (pos != fields[2].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed number");
        }
        if (!std::isfinite(s) || !std::isfinite(v))
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-finite value");
        auto it = by_subject.find(fields[0]);
        if (it == by_subject.end()) {
            order.push_back(fields[0]);
            it = by_subject.emplace(fields[0], std::vector<std::pair<double, double>>{}).first;
        }
        it->second.emplace_back(s, v);
        any_row = true;
    }
    if (!any_row) throw std::runtime_error(path + ": no data rows");

    SparseFunctionalDataset dataset;
    double smin = std::numeric_limits<double>::infinity();
    double smax = -std::numeric_limits<double>::infinity();
    for (const auto& id : order) {
        auto& rows = by_subject[id];
        std::sort(rows.begin(), rows.end());
        for (std::size_t j = 1; j < rows.size(); ++j)
            if (rows[j].first == rows[j - 1].first)
                throw std::runtime_error(path + ": duplicate observation point s=" +
                                         format_double(rows[j].first) + " for subject " + id);
        SparseSubject subj;
        subj.id = id;
        subj.obs_points.resize(static_cast<Eigen::Index>(rows.size()));
        subj.obs_values.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t j = 0; j < rows.size(); ++j) {
            subj.obs_points(static_cast<Eigen::Index>(j)) = rows[j].first;
            subj.obs_values(static_cast<Eigen::Index>(j)) = rows[j].second;
            smin = std::min(smin, rows[j].first);
            smax = std::max(smax, rows[j].first);
        }
        dataset.subjects.push_back(std::move(subj));
    }
    dataset.domain = domain.value_or(Interval{smin, smax});
    dataset.validate();
    return dataset;
}

void write_long_csv(const SparseFunctionalDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "subject_id,s,value\n";
    for (const auto& subj : dataset.subjects)
        for (Eigen::Index j = 0; j < subj.obs_points.size(); ++j)
            out << subj.id << ',' << format_double(subj.obs_points(j)) << ','
                << format_double(subj.obs_values(j)) << '\n';
}

void write_long_csv(const DenseCurveMatrix& curves, const std::vector<std::string>& ids,
                    const std::string& path) {
    if (static_cast<Eigen::Index>(ids.size()) != curves.num_curves())
        throw std::invalid_argument("write_long_csv: id count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "subject_id,s,value\n";
    for (Eigen::Index i = 0; i < curves.num_curves(); ++i)
        for (Eigen::Index g = 0; g < curves.grid.size(); ++g)
            out << ids[static_cast<std::size_t>(i)] << ','
                << format_double(curves.grid.points()(g)) << ','
                << format_double(curves.values(i, g)) << '\n';
}

void write_wide_csv(const DenseCurveMatrix& curves, const std::vector<std::string>& ids,
                    const std::string& path) {
    if (static_cast<Eigen::Index>(ids.size()) != curves.num_curves())
        throw std::invalid_argument("write_wide_csv: id count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "subject_id";
    for (Eigen::Index g = 0; g < curves.grid.size(); ++g) out << ",v" << (g + 1);
    out << '\n';
    for (Eigen::Index i = 0; i < curves.num_curves(); ++i) {
        out << ids[static_cast<std::size_t>(i)];
        for (Eigen::Index g = 0; g < curves.grid.size(); ++g)
            out << ',' << format_double(curves.values(i, g));
        out << '\n';
    }
}

}  // namespace fdepth
