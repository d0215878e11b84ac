#include "explab/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>

#include "explab/error.hpp"

namespace explab {
namespace {

constexpr std::array<unsigned char, 4> kMagic{'F', 'A', 'M', '1'};
constexpr std::size_t kHeaderBytes = 12;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view token) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') {
        token.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
        return std::nullopt;
    }
    return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

// Calls fn(line_number, line) for each non-blank line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        const auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        ++line_no;
        if (!trim(line).empty()) {
            fn(line_no, line);
        }
        if (end == std::string_view::npos) {
            break;
        }
        start = end + 1;
    }
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<unsigned char>((v >> shift) & 0xFFu));
    }
}

bool has_magic(std::span<const unsigned char> bytes) {
    return bytes.size() >= kMagic.size() && std::equal(kMagic.begin(), kMagic.end(), bytes.begin());
}

bool wants_fam1(const std::filesystem::path& path, MatrixFormat format) {
    if (format != MatrixFormat::Auto) {
        return format == MatrixFormat::Fam1;
    }
    const auto ext = path.extension().string();
    return ext == ".fam1" || ext == ".bin";
}

Matrix decode(std::span<const unsigned char> bytes, MatrixFormat format) {
    if (format == MatrixFormat::Fam1 || (format == MatrixFormat::Auto && has_magic(bytes))) {
        return parse_fam1(bytes);
    }
    return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<double> single_column(const Matrix& m, const std::filesystem::path& path) {
    if (m.cols() != 1) {
        throw ParseError(path.string() + ": expected a single column, found " + std::to_string(m.cols()));
    }
    return m.column(0);
}

} // namespace

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

Matrix parse_csv(std::string_view text) {
    std::vector<double> data;
    std::size_t cols = 0;
    std::size_t rows = 0;
    bool first = true;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        const auto fields = split_fields(line);
        if (first) {
            first = false;
            if (!parse_number(fields.front())) {
                cols = fields.size();
                return;  // header
            }
        }
        if (cols == 0) {
            cols = fields.size();
        }
        if (fields.size() != cols) {
            throw ParseError("expected " + std::to_string(cols) + " fields, found " + std::to_string(fields.size()),
                             line_no);
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto v = parse_number(fields[c]);
            if (!v) {
                throw ParseError("field " + std::to_string(c + 1) + " is not a number: '" + std::string(fields[c]) + "'",
                                 line_no);
            }
            data.push_back(*v);
        }
        ++rows;
    });
    if (rows == 0) {
        throw ParseError("no data rows");
    }
    return Matrix(rows, cols, std::move(data));
}

std::string format_csv(const Matrix& m) {
    std::string out;
    char buf[32];
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c > 0) {
                out.push_back(',');
            }
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m(r, c));
            out.append(buf, ptr);
        }
        out.push_back('\n');
    }
    return out;
}

Matrix parse_fam1(std::span<const unsigned char> bytes) {
    if (bytes.size() < kHeaderBytes || !has_magic(bytes)) {
        throw ParseError("FAM1: missing magic or truncated header");
    }
    const std::uint64_t rows = read_u32_le(bytes.data() + 4);
    const std::uint64_t cols = read_u32_le(bytes.data() + 8);
    const std::uint64_t expected = kHeaderBytes + 4 * rows * cols;
    if (bytes.size() != expected) {
        throw ParseError("FAM1: header declares " + std::to_string(rows) + "x" + std::to_string(cols) + " (" +
                         std::to_string(expected) + " bytes), file has " + std::to_string(bytes.size()) + " bytes");
    }
    Matrix m(rows, cols);
    const unsigned char* p = bytes.data() + kHeaderBytes;
    for (double& v : m.values()) {
        v = static_cast<double>(std::bit_cast<float>(read_u32_le(p)));
        p += 4;
    }
    return m;
}

std::vector<unsigned char> encode_fam1(const Matrix& m) {
    constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
    if (m.rows() > kMax || m.cols() > kMax) {
        throw std::invalid_argument("FAM1: matrix too large for 32-bit dimensions");
    }
    std::vector<unsigned char> out(kMagic.begin(), kMagic.end());
    out.reserve(kHeaderBytes + 4 * m.size());
    write_u32_le(out, static_cast<std::uint32_t>(m.rows()));
    write_u32_le(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.values()) {
        write_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

Matrix read_features(const std::filesystem::path& path, MatrixFormat format) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode(bytes, format);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_features(const std::filesystem::path& path, const Matrix& m, MatrixFormat format) {
    if (wants_fam1(path, format)) {
        write_file_bytes(path, encode_fam1(m));
        return;
    }
    const auto text = format_csv(m);
    write_file_bytes(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::vector<double> read_attribute(const std::filesystem::path& path, MatrixFormat format) {
    return single_column(read_features(path, format), path);
}

void write_attribute(const std::filesystem::path& path, std::span<const double> values, MatrixFormat format) {
    write_features(path, Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end())), format);
}

std::vector<int> read_labels(const std::filesystem::path& path, MatrixFormat format) {
    const auto values = read_attribute(path, format);
    std::vector<int> labels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != 0.0 && values[i] != 1.0) {
            throw ParseError(path.string() + ": label at row " + std::to_string(i + 1) + " is not 0 or 1");
        }
        labels[i] = static_cast<int>(values[i]);
    }
    return labels;
}

std::string_view to_string(SplitName split) {
    switch (split) {
    case SplitName::Train: return "train";
    case SplitName::Validation: return "validation";
    case SplitName::Test: return "test";
    }
    return "unknown";
}

SplitName parse_split_name(std::string_view text) {
    text = trim(text);
    if (text == "train") return SplitName::Train;
    if (text == "validation") return SplitName::Validation;
    if (text == "test") return SplitName::Test;
    throw std::invalid_argument("unknown split '" + std::string(text) + "' (expected train, validation or test)");
}

std::vector<MetadataRow> parse_metadata(std::string_view text) {
    std::vector<MetadataRow> rows;
    std::optional<std::size_t> id_col, split_col, label_col, group_col;
    std::size_t width = 0;
    bool header = true;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        const auto fields = split_fields(line);
        if (header) {
            header = false;
            width = fields.size();
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (fields[i] == "id") id_col = i;
                else if (fields[i] == "split") split_col = i;
                else if (fields[i] == "label") label_col = i;
                else if (fields[i] == "group") group_col = i;
            }
            if (!id_col || !split_col || !label_col) {
                throw ParseError("metadata header must name columns id, split and label", line_no);
            }
            return;
        }
        if (fields.size() != width) {
            throw ParseError("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()),
                             line_no);
        }
        MetadataRow row;
        row.id = std::string(fields[*id_col]);
        try {
            row.split = parse_split_name(fields[*split_col]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), line_no);
        }
        const auto label = fields[*label_col];
        if (label != "0" && label != "1") {
            throw ParseError("label must be 0 or 1, got '" + std::string(label) + "'", line_no);
        }
        row.label = label == "1" ? 1 : 0;
        if (group_col) {
            row.group = std::string(fields[*group_col]);
        }
        rows.push_back(std::move(row));
    });
    if (header) {
        throw ParseError("metadata file is empty");
    }
    return rows;
}

std::vector<MetadataRow> read_metadata(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return parse_metadata(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace explab
