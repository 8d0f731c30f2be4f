#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "fiberphase/errors.hpp"

namespace fiberphase {

/// Shortest representation that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw internal_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

/// Atomic text-file writer: content lands under the final name only on
/// success (write to a sibling temp file, then rename).
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw config_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw config_error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw config_error("rename failed for " + path.string());
    }
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(std::move(header)) {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (i) body_ += ',';
            body_ += columns_[i];
        }
        body_ += '\n';
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_.size())
            throw internal_error("CsvWriter: row width mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) body_ += ',';
            body_ += format_double(values[i]);
        }
        body_ += '\n';
    }

    const std::string& content() const { return body_; }

    void save(const std::filesystem::path& path) const { write_file_atomic(path, body_); }

  private:
    std::vector<std::string> columns_;
    std::string body_;
};

} // namespace fiberphase
