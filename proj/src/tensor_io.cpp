// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "pilotspoof/channel.hpp"

namespace pilotspoof
{
    namespace
    {
        static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

        template <typename T>
        T to_little(T v)
        {
            if constexpr (std::endian::native == std::endian::big)
            {
                std::array<unsigned char, sizeof(T)> b;
                std::memcpy(b.data(), &v, sizeof(T));
                std::reverse(b.begin(), b.end());
                std::memcpy(&v, b.data(), sizeof(T));
            }
            return v;
        }

        template <typename T>
        void put(std::ostream &os, T v)
        {
            v = to_little(v);
            os.write(reinterpret_cast<const char *>(&v), sizeof(T));
        }

        template <typename T>
        T get(std::istream &is)
        {
            T v{};
            is.read(reinterpret_cast<char *>(&v), sizeof(T));
            if (!is)
                throw ConfigError("tensor dump: truncated input");
            return to_little(v);
        }
    } // namespace

    void write_tensor(std::ostream &os, const Tensor3 &t)
    {
        put<std::uint64_t>(os, t.dim_m());
        put<std::uint64_t>(os, t.dim_s());
        put<std::uint64_t>(os, t.dim_k());
        for (const cd &v : t.flat())
        {
            put<double>(os, v.real());
            put<double>(os, v.imag());
        }
    }

    Tensor3 read_tensor(std::istream &is)
    {
        const auto m = get<std::uint64_t>(is);
        const auto s = get<std::uint64_t>(is);
        const auto k = get<std::uint64_t>(is);
        constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 32;
        if (m == 0 || s == 0 || k == 0 || m > kMaxEntries / s || m * s > kMaxEntries / k)
            throw ConfigError("tensor dump: invalid dimension header");
        Tensor3 t(m, s, k);
        for (cd &v : t.flat())
        {
            const double re = get<double>(is);
            const double im = get<double>(is);
            v = cd(re, im);
        }
        return t;
    }

    void write_tensor_file(const std::string &path, const Tensor3 &t)
    {
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw ConfigError("cannot open " + path + " for writing");
        write_tensor(os, t);
    }

    Tensor3 read_tensor_file(const std::string &path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw ConfigError("cannot open " + path);
        return read_tensor(is);
    }
} // namespace pilotspoof
