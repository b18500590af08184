// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "gpm/error.hpp"
#include "gpm/tensor.hpp"

// Little-endian binary encoding shared by checkpoints and corpus tensors.
// A tensor record is: u32 rank, u64 extent per axis, then the elements as
// IEEE-754 doubles in row-major order.
namespace gpm::io {

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    void bytes(std::string_view data);
    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v);
    void f64(double v);
    /// u32 length prefix followed by the bytes.
    void string(std::string_view s);
    void tensor(const Tensor& t);

private:
    std::ostream& os_;
};

/// Throws DataError naming `context` on short reads.
class Reader {
public:
    Reader(std::istream& is, std::string context) : is_(is), context_(std::move(context)) {}

    std::string bytes(std::size_t n);
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64();
    double f64();
    std::string string();
    Tensor tensor();
    /// Reads n doubles into out; returns false on clean EOF before the first byte.
    bool f64_block(std::span<double> out);

    [[noreturn]] void fail(const std::string& what) const;

private:
    void read_exact(char* dst, std::size_t n);

    std::istream& is_;
    std::string context_;
};

inline constexpr std::string_view kTensorMagic = "GPMDTNSR";
inline constexpr std::uint32_t kTensorVersion = 1;

/// Single-tensor file: magic, u32 version, tensor record.
void write_tensor_file(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor_file(const std::filesystem::path& path);

/// Video tensors are stored frame-major (T x C x H x W) so they can be consumed
/// one frame at a time. These convert from and to the in-memory C x T x H x W.
Tensor to_frame_major(const Tensor& video);
Tensor from_frame_major(const Tensor& frames);

void write_video_file(const std::filesystem::path& path, const Tensor& video);
Tensor read_video_file(const std::filesystem::path& path);

/// Incremental reader for a frame-major video file or pipe. A frame count of
/// zero in the header means "until end of stream".
class FrameStream {
public:
    explicit FrameStream(std::istream& is);

    /// False when the stream was empty (no header at all).
    bool has_header() const { return has_header_; }
    std::size_t declared_frames() const { return frames_; }
    Shape frame_shape() const { return {channels_, height_, width_}; }

    /// Next frame as C x H x W, or nullopt at the end of the stream. Throws
    /// DataError naming the frame index on a truncated record.
    std::optional<Tensor> next();
    std::size_t frames_read() const { return index_; }

private:
    std::istream& is_;
    Reader reader_;
    bool has_header_ = false;
    std::size_t frames_ = 0, channels_ = 0, height_ = 0, width_ = 0;
    std::size_t index_ = 0;
};

} // namespace gpm::io
