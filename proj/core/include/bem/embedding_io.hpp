#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "bem/embedding.hpp"

namespace bem {

// BEMEMB v1: one ASCII header line `BEMEMB v1 dim=<d> count=<n>\n` followed by
// n rows of d little-endian IEEE-754 float32 values. Rows are renormalized on
// load; non-finite values, zero rows and short payloads are data errors.

std::vector<Embedding> read_embeddings(std::istream& in);
std::vector<Embedding> read_embeddings(const std::filesystem::path& path);

void write_embeddings(std::ostream& out, const std::vector<Embedding>& rows);
void write_embeddings(const std::filesystem::path& path, const std::vector<Embedding>& rows);

}  // namespace bem
