#pragma once

#include "mcfsound/core.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace mcfsound {

/// Sample to PCM16: scaled by 32767 and rounded half away from zero.
inline std::int16_t to_pcm16(double s) {
    if (!(s >= -1.0 && s <= 1.0)) throw SoundError("sample " + std::to_string(s) + " outside [-1, 1]");
    return static_cast<std::int16_t>(std::lround(s * 32767.0));
}

inline double from_pcm16(std::int16_t q) { return q / 32767.0; }

/// Mono 16-bit PCM RIFF/WAVE with the canonical 44-byte header.
inline std::string wav_bytes(const std::vector<double>& samples, int sample_rate) {
    if (sample_rate < 1) throw SoundError("sample rate must be positive");
    std::string out;
    out.reserve(44 + 2 * samples.size());
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    auto u16 = [&](std::uint16_t v) {
        out.push_back(static_cast<char>(v & 0xff));
        out.push_back(static_cast<char>(v >> 8));
    };
    const auto data = static_cast<std::uint32_t>(2 * samples.size());
    out += "RIFF";
    u32(36 + data);
    out += "WAVEfmt ";
    u32(16);
    u16(1);  // PCM
    u16(1);  // mono
    u32(static_cast<std::uint32_t>(sample_rate));
    u32(static_cast<std::uint32_t>(sample_rate) * 2);
    u16(2);
    u16(16);
    out += "data";
    u32(data);
    for (double s : samples) u16(static_cast<std::uint16_t>(to_pcm16(s)));
    return out;
}

inline void write_wav(const std::vector<double>& samples, int sample_rate, const std::string& path) {
    const std::string bytes = wav_bytes(samples, sample_rate);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SoundError("cannot open " + path + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw SoundError("failed writing " + path);
}

struct WavData {
    int sample_rate = 0;
    std::vector<std::int16_t> pcm;

    std::vector<double> samples() const {
        std::vector<double> out;
        out.reserve(pcm.size());
        for (auto q : pcm) out.push_back(from_pcm16(q));
        return out;
    }
};

/// Reads the files write_wav produces.
inline WavData read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SoundError("cannot open " + path);
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    auto u32 = [&](std::size_t at) {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[at + i]);
        return v;
    };
    auto u16 = [&](std::size_t at) {
        return static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[at]) |
                                          (static_cast<unsigned char>(bytes[at + 1]) << 8));
    };
    if (bytes.size() < 44 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 8, "WAVEfmt ") != 0 ||
        bytes.compare(36, 4, "data") != 0)
        throw SoundError(path + ": not a canonical WAV file");
    if (u16(20) != 1 || u16(22) != 1 || u16(34) != 16) throw SoundError(path + ": expected mono 16-bit PCM");
    const std::uint32_t data = u32(40);
    if (bytes.size() != 44 + std::size_t(data) || data % 2) throw SoundError(path + ": data size mismatch");
    WavData w;
    w.sample_rate = static_cast<int>(u32(24));
    w.pcm.resize(data / 2);
    for (std::size_t i = 0; i < w.pcm.size(); ++i) w.pcm[i] = static_cast<std::int16_t>(u16(44 + 2 * i));
    return w;
}

}  // namespace mcfsound
