#include "pcpd/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pcpd {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
  throw std::runtime_error("tensor file " + path.string() + ": " + why);
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const DenseTensor& t) {
  t.validate();
  std::string buf;
  buf.reserve(16 + 8 * t.dims.size() + 8 * t.values.size());
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(t.dims.size()));
  put_u32(buf, 0);  // reserved; keeps the payload 8-byte aligned
  for (Index d : t.dims) put_u64(buf, static_cast<std::uint64_t>(d));
  for (double v : t.values) put_u64(buf, std::bit_cast<std::uint64_t>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(path, "write failed");
}

DenseTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());

  if (buf.size() < 16) fail(path, "truncated header");
  if (std::memcmp(buf.data(), kMagic, 4) != 0) fail(path, "bad magic");
  const std::uint32_t version = get_u32(p + 4);
  if (version != kVersion) fail(path, "unsupported version " + std::to_string(version));
  const std::uint32_t ndims = get_u32(p + 8);
  if (ndims < 2 || ndims > 64) fail(path, "implausible ndims " + std::to_string(ndims));
  if (buf.size() < 16 + 8ull * ndims) fail(path, "truncated dimension table");

  std::vector<Index> dims(ndims);
  std::uint64_t count = 1;
  for (std::uint32_t n = 0; n < ndims; ++n) {
    const std::uint64_t d = get_u64(p + 16 + 8 * n);
    if (d == 0 || d > (1ull << 40)) fail(path, "implausible dimension");
    if (count > (1ull << 40) / d) fail(path, "payload size overflow");
    count *= d;
    dims[n] = static_cast<Index>(d);
  }
  const std::size_t header = 16 + 8ull * ndims;
  if (buf.size() != header + 8ull * count) fail(path, "payload length mismatch");

  std::vector<double> values(count);
  for (std::uint64_t i = 0; i < count; ++i)
    values[i] = std::bit_cast<double>(get_u64(p + header + 8 * i));
  return DenseTensor(std::move(dims), std::move(values));
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::string out;
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j) out += ',';
      out += buf;
    }
    out += '\n';
  }
  write_text_file(path, out);
}

std::string format_fit_report(const FitReport& report, const std::string& algo,
                              const std::vector<Index>& dims) {
  std::string out;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out += "algo = " + algo + "\n";
  out += "dims = [";
  for (std::size_t i = 0; i < dims.size(); ++i)
    out += (i ? ", " : "") + std::to_string(dims[i]);
  out += "]\n";
  out += "estimated_rank = " + std::to_string(report.estimated_rank) + "\n";
  out += "converged = " + std::string(report.converged ? "true" : "false") + "\n";
  out += "iterations_run = " + std::to_string(report.iterations_run) + "\n";
  out += "wall_time_seconds = " + num(report.wall_time_seconds) + "\n";
  out += "z_powers = [";
  for (std::size_t i = 0; i < report.z_powers.size(); ++i)
    out += (i ? ", " : "") + num(report.z_powers[i]);
  out += "]\n";
  out += "rank_trace = [";
  for (std::size_t i = 0; i < report.rank_trace.size(); ++i)
    out += (i ? ", " : "") + std::to_string(report.rank_trace[i]);
  out += "]\n";
  if (!report.elbo_trace.empty()) {
    out += "elbo_trace = [";
    for (std::size_t i = 0; i < report.elbo_trace.size(); ++i)
      out += (i ? ", " : "") + num(report.elbo_trace[i]);
    out += "]\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pcpd
