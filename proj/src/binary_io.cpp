// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "gpm/binary_io.hpp"

#include <array>
#include <bit>
#include <fstream>

namespace gpm::io {
namespace {

constexpr std::uint32_t kMaxRank = 8;

template <typename U>
void put_le(std::ostream& os, U v) {
    std::array<char, sizeof(U)> buf;
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(buf.data(), buf.size());
}

template <typename U>
U get_le(const char* p) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

} // namespace

void Writer::bytes(std::string_view data) { os_.write(data.data(), static_cast<std::streamsize>(data.size())); }
void Writer::u8(std::uint8_t v) { put_le(os_, v); }
void Writer::u32(std::uint32_t v) { put_le(os_, v); }
void Writer::u64(std::uint64_t v) { put_le(os_, v); }
void Writer::i64(std::int64_t v) { put_le(os_, static_cast<std::uint64_t>(v)); }
void Writer::f64(double v) { put_le(os_, std::bit_cast<std::uint64_t>(v)); }

void Writer::string(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
}

void Writer::tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) u64(e);
    if constexpr (std::endian::native == std::endian::little) {
        os_.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    } else {
        for (double v : t.data()) f64(v);
    }
}

void Reader::fail(const std::string& what) const { throw DataError(context_ + ": " + what); }

void Reader::read_exact(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) fail("truncated file");
}

std::string Reader::bytes(std::size_t n) {
    std::string s(n, '\0');
    read_exact(s.data(), n);
    return s;
}

std::uint8_t Reader::u8() {
    char b[1];
    read_exact(b, 1);
    return get_le<std::uint8_t>(b);
}

std::uint32_t Reader::u32() {
    char b[4];
    read_exact(b, 4);
    return get_le<std::uint32_t>(b);
}

std::uint64_t Reader::u64() {
    char b[8];
    read_exact(b, 8);
    return get_le<std::uint64_t>(b);
}

std::int64_t Reader::i64() { return static_cast<std::int64_t>(u64()); }
double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string Reader::string() {
    const std::uint32_t n = u32();
    if (n > (1u << 24)) fail("implausible string length " + std::to_string(n));
    return bytes(n);
}

Tensor Reader::tensor() {
    const std::uint32_t rank = u32();
    if (rank > kMaxRank) fail("implausible tensor rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& e : shape) e = u64();
    if (shape_size(shape) > (std::size_t{1} << 32)) fail("implausible tensor shape " + shape_string(shape));
    Tensor t(shape);
    if (!f64_block(t.data()) && t.size() > 0) fail("truncated file");
    return t;
}

bool Reader::f64_block(std::span<double> out) {
    if (out.empty()) return true;
    const std::size_t n = out.size() * sizeof(double);
    if constexpr (std::endian::native == std::endian::little) {
        is_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n));
        const auto got = static_cast<std::size_t>(is_.gcount());
        if (got == 0) return false;
        if (got != n) fail("truncated file");
    } else {
        std::string raw(n, '\0');
        is_.read(raw.data(), static_cast<std::streamsize>(n));
        const auto got = static_cast<std::size_t>(is_.gcount());
        if (got == 0) return false;
        if (got != n) fail("truncated file");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<double>(get_le<std::uint64_t>(raw.data() + 8 * i));
    }
    return true;
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + path.string());
    Writer w(os);
    w.bytes(kTensorMagic);
    w.u32(kTensorVersion);
    w.tensor(t);
    if (!os) throw DataError("failed writing " + path.string());
}

Tensor read_tensor_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path.string());
    Reader r(is, path.string());
    if (r.bytes(kTensorMagic.size()) != kTensorMagic) r.fail("not a tensor file");
    if (const auto v = r.u32(); v != kTensorVersion) {
        r.fail("unsupported tensor file version " + std::to_string(v));
    }
    return r.tensor();
}

Tensor to_frame_major(const Tensor& video) {
    if (video.rank() != 4) throw std::invalid_argument("video must be C x T x H x W, got " + shape_string(video.shape()));
    const std::size_t C = video.extent(0), T = video.extent(1), HW = video.extent(2) * video.extent(3);
    Tensor out({T, C, video.extent(2), video.extent(3)});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < T; ++t)
            std::copy_n(video.data().data() + (c * T + t) * HW, HW, out.data().data() + (t * C + c) * HW);
    return out;
}

Tensor from_frame_major(const Tensor& frames) {
    if (frames.rank() != 4) throw std::invalid_argument("frames must be T x C x H x W, got " + shape_string(frames.shape()));
    const std::size_t T = frames.extent(0), C = frames.extent(1), HW = frames.extent(2) * frames.extent(3);
    Tensor out({C, T, frames.extent(2), frames.extent(3)});
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < C; ++c)
            std::copy_n(frames.data().data() + (t * C + c) * HW, HW, out.data().data() + (c * T + t) * HW);
    return out;
}

void write_video_file(const std::filesystem::path& path, const Tensor& video) {
    write_tensor_file(path, to_frame_major(video));
}

Tensor read_video_file(const std::filesystem::path& path) {
    Tensor t = read_tensor_file(path);
    if (t.rank() != 4) throw DataError(path.string() + ": expected a T x C x H x W video, got " + shape_string(t.shape()));
    return from_frame_major(t);
}

FrameStream::FrameStream(std::istream& is) : is_(is), reader_(is, "frame stream") {
    if (is_.peek() == std::char_traits<char>::eof()) return;
    if (reader_.bytes(kTensorMagic.size()) != kTensorMagic) reader_.fail("not a tensor stream");
    if (const auto v = reader_.u32(); v != kTensorVersion) reader_.fail("unsupported version " + std::to_string(v));
    if (const auto rank = reader_.u32(); rank != 4) reader_.fail("expected a rank-4 frame stream, got rank " + std::to_string(rank));
    frames_ = reader_.u64();
    channels_ = reader_.u64();
    height_ = reader_.u64();
    width_ = reader_.u64();
    has_header_ = true;
}

std::optional<Tensor> FrameStream::next() {
    if (!has_header_) return std::nullopt;
    if (frames_ != 0 && index_ >= frames_) return std::nullopt;
    Tensor frame({channels_, height_, width_});
    bool got = false;
    try {
        got = reader_.f64_block(frame.data());
    } catch (const DataError&) {
        throw DataError("frame stream: malformed record at frame " + std::to_string(index_));
    }
    if (!got) {
        if (frames_ != 0) throw DataError("frame stream: missing frame " + std::to_string(index_));
        return std::nullopt;
    }
    ++index_;
    return frame;
}

} // namespace gpm::io
