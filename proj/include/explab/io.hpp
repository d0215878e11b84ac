#pragma once

// Feature/attribute files.
//
// CSV: comma separated, one sample per line, optional single header line
// (recognised by a non-numeric first token).
//
// FAM1 (little endian throughout):
//   bytes 0..3   "FAM1"
//   bytes 4..7   row count, uint32
//   bytes 8..11  column count, uint32
//   then rows*cols float32 values, row-major.
// Values are widened to double on read and narrowed to float on write.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "explab/matrix.hpp"

namespace explab {

enum class MatrixFormat { Auto, Csv, Fam1 };

/// Auto on read: FAM1 when the file starts with the magic, CSV otherwise.
/// Auto on write: FAM1 for ".fam1" or ".bin" extensions, CSV otherwise.
Matrix read_features(const std::filesystem::path& path, MatrixFormat format = MatrixFormat::Auto);
void write_features(const std::filesystem::path& path, const Matrix& m, MatrixFormat format = MatrixFormat::Auto);

/// Single-column file as a vector.
std::vector<double> read_attribute(const std::filesystem::path& path, MatrixFormat format = MatrixFormat::Auto);
void write_attribute(const std::filesystem::path& path, std::span<const double> values,
                     MatrixFormat format = MatrixFormat::Auto);

/// Single-column file of 0/1 labels.
std::vector<int> read_labels(const std::filesystem::path& path, MatrixFormat format = MatrixFormat::Auto);

Matrix parse_csv(std::string_view text);
std::string format_csv(const Matrix& m);

Matrix parse_fam1(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_fam1(const Matrix& m);

/// Whole file as bytes; throws std::runtime_error when unreadable.
std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes);

enum class SplitName { Train, Validation, Test };
std::string_view to_string(SplitName split);
SplitName parse_split_name(std::string_view text);

struct MetadataRow {
    std::string id;
    SplitName split = SplitName::Train;
    int label = 0;
    std::string group;
};

/// Metadata CSV with a required header naming columns id, split, label and
/// optionally group, in any order.
std::vector<MetadataRow> parse_metadata(std::string_view text);
std::vector<MetadataRow> read_metadata(const std::filesystem::path& path);

} // namespace explab
