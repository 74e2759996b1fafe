#include "stepsize/csv.hpp"

#include <charconv>
#include <fstream>
#include <system_error>
#include <vector>

namespace stepsize {

namespace {

constexpr std::string_view kCorner = "alpha2\\alpha1";

void split(std::string_view line, std::vector<std::string_view>& fields) {
    fields.clear();
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

// Iterates lines of a loaded file, skipping a final empty fragment.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        const std::size_t nl = text_.find('\n', pos_);
        if (nl == std::string_view::npos) {
            line = text_.substr(pos_);
            pos_ = text_.size();
        } else {
            line = text_.substr(pos_, nl - pos_);
            pos_ = nl + 1;
        }
        return true;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string format_double(double v) {
    char buf[40];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, result.ptr);
}

double parse_double(std::string_view field) {
    double v = 0.0;
    const auto result = std::from_chars(field.data(), field.data() + field.size(), v);
    if (result.ec != std::errc() || result.ptr != field.data() + field.size()) {
        throw DataError("not a number: '" + std::string(field) + "'");
    }
    return v;
}

std::uint64_t parse_uint(std::string_view field) {
    std::uint64_t v = 0;
    const auto result = std::from_chars(field.data(), field.data() + field.size(), v);
    if (result.ec != std::errc() || result.ptr != field.data() + field.size()) {
        throw DataError("not a nonnegative integer: '" + std::string(field) + "'");
    }
    return v;
}

void write_summary_csv(const std::filesystem::path& path, const SweepTable& table) {
    std::vector<std::string> param_names;
    for (const SweepRow& row : table.rows) {
        for (const auto& [name, value] : row.params) {
            bool seen = false;
            for (const std::string& known : param_names) {
                if (known == name) {
                    seen = true;
                    break;
                }
            }
            if (!seen) param_names.push_back(name);
        }
    }

    std::string text = "algorithm";
    for (const std::string& name : param_names) {
        text += ',';
        text += name;
    }
    text += ",seed,steps,mean_loss,tail_mean_loss,diverged\n";

    for (const SweepRow& row : table.rows) {
        text += to_string(row.algorithm);
        for (const std::string& name : param_names) {
            text += ',';
            for (const auto& [param, value] : row.params) {
                if (param == name) {
                    text += format_double(value);
                    break;
                }
            }
        }
        text += ',';
        text += std::to_string(row.seed);
        text += ',';
        text += std::to_string(row.steps);
        text += ',';
        text += format_double(row.mean_loss);
        text += ',';
        text += format_double(row.tail_mean_loss);
        text += row.diverged ? ",1\n" : ",0\n";
    }
    write_file(path, text);
}

SweepTable read_summary_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    LineReader lines(text);
    std::string_view line;
    std::vector<std::string_view> fields;

    if (!lines.next(line)) throw DataError("summary CSV '" + path.string() + "' is empty");
    split(line, fields);
    const char* expected =
        "expected header algorithm,<params...>,seed,steps,mean_loss,tail_mean_loss,diverged";
    if (fields.size() < 6 || fields.front() != "algorithm") {
        throw DataError("summary CSV '" + path.string() + "': " + expected);
    }
    const std::size_t n_params = fields.size() - 6;
    const std::size_t n_cols = fields.size();
    std::vector<std::string> param_names;
    for (std::size_t i = 0; i < n_params; ++i) {
        param_names.emplace_back(fields[1 + i]);
    }
    const std::string_view tail[] = {"seed", "steps", "mean_loss", "tail_mean_loss",
                                     "diverged"};
    for (std::size_t i = 0; i < 5; ++i) {
        if (fields[1 + n_params + i] != tail[i]) {
            throw DataError("summary CSV '" + path.string() + "': " + expected);
        }
    }

    SweepTable table;
    std::size_t line_no = 1;
    while (lines.next(line)) {
        ++line_no;
        if (line.empty()) continue;
        split(line, fields);
        if (fields.size() != n_cols) {
            throw DataError("summary CSV '" + path.string() + "' line " +
                            std::to_string(line_no) + ": expected " + std::to_string(n_cols) +
                            " fields, got " + std::to_string(fields.size()));
        }
        SweepRow row;
        row.algorithm = algorithm_from_string(std::string(fields[0]));
        for (std::size_t i = 0; i < n_params; ++i) {
            if (!fields[1 + i].empty()) {
                row.params.emplace_back(param_names[i], parse_double(fields[1 + i]));
            }
        }
        row.seed = parse_uint(fields[1 + n_params]);
        row.steps = parse_uint(fields[2 + n_params]);
        row.mean_loss = parse_double(fields[3 + n_params]);
        row.tail_mean_loss = parse_double(fields[4 + n_params]);
        const std::string_view flag = fields[5 + n_params];
        if (flag != "0" && flag != "1") {
            throw DataError("summary CSV '" + path.string() + "' line " +
                            std::to_string(line_no) + ": diverged must be 0 or 1");
        }
        row.diverged = flag == "1";
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_trace_csv(const std::filesystem::path& path, const RunRecord& record) {
    const std::size_t n = record.sample_steps.size();
    if (n == 0) {
        throw DataError("trace: record has no samples; run with record_every > 0");
    }
    const bool has_alpha = !record.sample_alphas.empty();
    const bool has_sigma = !record.sample_sigmas.empty();
    const std::size_t d = has_alpha ? record.sample_alphas.front().size() : 0;
    if (record.sample_losses.size() != n || (has_alpha && record.sample_alphas.size() != n) ||
        (has_sigma &&
         (record.sample_sigmas.size() != n || record.sample_alpha_stars.size() != n))) {
        throw DataError("trace: record sample columns have mismatched lengths");
    }

    std::string text = "step,loss";
    for (std::size_t i = 0; i < d; ++i) text += ",alpha_" + std::to_string(i);
    if (has_sigma) text += ",sigma,alpha_star";
    text += '\n';

    for (std::size_t k = 0; k < n; ++k) {
        text += std::to_string(record.sample_steps[k]);
        text += ',';
        text += format_double(record.sample_losses[k]);
        if (has_alpha) {
            if (record.sample_alphas[k].size() != d) {
                throw DataError("trace: inconsistent step-size dimension across samples");
            }
            for (const double a : record.sample_alphas[k]) {
                text += ',';
                text += format_double(a);
            }
        }
        if (has_sigma) {
            text += ',';
            text += format_double(record.sample_sigmas[k]);
            text += ',';
            text += format_double(record.sample_alpha_stars[k]);
        }
        text += '\n';
    }
    write_file(path, text);
}

RunRecord read_trace_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    LineReader lines(text);
    std::string_view line;
    std::vector<std::string_view> fields;

    if (!lines.next(line)) throw DataError("trace CSV '" + path.string() + "' is empty");
    split(line, fields);
    const char* expected =
        "expected header step,loss[,alpha_0..alpha_k][,sigma,alpha_star]";
    if (fields.size() < 2 || fields[0] != "step" || fields[1] != "loss") {
        throw DataError("trace CSV '" + path.string() + "': " + expected);
    }
    std::size_t d = 0;
    std::size_t col = 2;
    while (col < fields.size() && fields[col] == "alpha_" + std::to_string(d)) {
        ++d;
        ++col;
    }
    bool has_sigma = false;
    if (col < fields.size()) {
        if (fields.size() - col == 2 && fields[col] == "sigma" &&
            fields[col + 1] == "alpha_star") {
            has_sigma = true;
        } else {
            throw DataError("trace CSV '" + path.string() + "': " + expected);
        }
    }
    const std::size_t n_cols = fields.size();

    RunRecord record;
    std::size_t line_no = 1;
    while (lines.next(line)) {
        ++line_no;
        if (line.empty()) continue;
        split(line, fields);
        if (fields.size() != n_cols) {
            throw DataError("trace CSV '" + path.string() + "' line " +
                            std::to_string(line_no) + ": expected " + std::to_string(n_cols) +
                            " fields, got " + std::to_string(fields.size()));
        }
        record.sample_steps.push_back(parse_uint(fields[0]));
        record.sample_losses.push_back(parse_double(fields[1]));
        if (d > 0) {
            std::vector<double> alpha(d);
            for (std::size_t i = 0; i < d; ++i) alpha[i] = parse_double(fields[2 + i]);
            record.sample_alphas.push_back(std::move(alpha));
        }
        if (has_sigma) {
            record.sample_sigmas.push_back(parse_double(fields[2 + d]));
            record.sample_alpha_stars.push_back(parse_double(fields[3 + d]));
        }
    }
    if (record.sample_steps.empty()) {
        throw DataError("trace CSV '" + path.string() + "' has no data rows");
    }
    return record;
}

void write_landscape_csv(const std::filesystem::path& path, const LandscapeGrid& grid) {
    if (grid.loss.size() != grid.alpha2_axis.size()) {
        throw DataError("landscape: matrix row count does not match the alpha2 axis");
    }
    std::string text(kCorner);
    for (const double a : grid.alpha1_axis) {
        text += ',';
        text += format_double(a);
    }
    text += '\n';
    for (std::size_t i = 0; i < grid.loss.size(); ++i) {
        if (grid.loss[i].size() != grid.alpha1_axis.size()) {
            throw DataError("landscape: matrix width does not match the alpha1 axis");
        }
        text += format_double(grid.alpha2_axis[i]);
        for (const double l : grid.loss[i]) {
            text += ',';
            text += format_double(l);
        }
        text += '\n';
    }
    write_file(path, text);
}

LandscapeGrid read_landscape_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    LineReader lines(text);
    std::string_view line;
    std::vector<std::string_view> fields;

    if (!lines.next(line)) throw DataError("landscape CSV '" + path.string() + "' is empty");
    split(line, fields);
    if (fields.size() < 2 || fields[0] != kCorner) {
        throw DataError("landscape CSV '" + path.string() + "': expected header " +
                        std::string(kCorner) + ",<alpha1 axis...>");
    }

    LandscapeGrid grid;
    for (std::size_t i = 1; i < fields.size(); ++i) {
        grid.alpha1_axis.push_back(parse_double(fields[i]));
    }
    const std::size_t n_cols = fields.size();
    std::size_t line_no = 1;
    while (lines.next(line)) {
        ++line_no;
        if (line.empty()) continue;
        split(line, fields);
        if (fields.size() != n_cols) {
            throw DataError("landscape CSV '" + path.string() + "' line " +
                            std::to_string(line_no) + ": expected " + std::to_string(n_cols) +
                            " fields, got " + std::to_string(fields.size()));
        }
        grid.alpha2_axis.push_back(parse_double(fields[0]));
        std::vector<double> row(n_cols - 1);
        for (std::size_t j = 1; j < n_cols; ++j) row[j - 1] = parse_double(fields[j]);
        grid.loss.push_back(std::move(row));
    }
    if (grid.loss.empty()) {
        throw DataError("landscape CSV '" + path.string() + "' has no data rows");
    }
    return grid;
}

}  // namespace stepsize
