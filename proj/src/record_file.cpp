#include "fdm/record_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "record files are little-endian; big-endian hosts need byte swaps");

namespace fdm {
namespace {

constexpr char kRecordMagic[4] = {'F', 'D', 'R', 'S'};
constexpr char kCalMagic[4] = {'F', 'D', 'C', 'L'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError(std::string("truncated file while reading ") + what);
    return v;
}

void put_string(std::ofstream& out, const std::string& s) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::ifstream& in, const char* what) {
    const auto len = take<std::uint16_t>(in, what);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw FormatError(std::string("truncated file while reading ") + what);
    return s;
}

}  // namespace

int RecordSet::channel_index(const std::string& label) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
        if (channels[i].label == label) return static_cast<int>(i);
    return -1;
}

Trace RecordSet::trace(std::size_t record, std::size_t channel) const {
    Trace t;
    t.dt = dt;
    t.t0 = 0.0;
    t.samples = records.at(record).chans.at(channel);
    return t;
}

void write_records(const std::string& path, const RecordSet& rs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out.write(kRecordMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, rs.cfg_hash);
    put<std::uint64_t>(out, rs.seed);
    put<double>(out, rs.dt);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rs.record_len));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rs.channels.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rs.records.size()));
    for (const auto& ch : rs.channels) {
        put_string(out, ch.label);
        put<std::uint8_t>(out, static_cast<std::uint8_t>(ch.dtype));
        put<double>(out, ch.scale);
    }
    for (const auto& rec : rs.records) {
        if (rec.chans.size() != rs.channels.size())
            throw FormatError("record channel count mismatch while writing");
        put<std::uint8_t>(out, rec.flags);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.truth.size()));
        for (const auto& e : rec.truth) {
            put<double>(out, e.energy_kevee);
            put<double>(out, e.t_arrival);
            put<std::uint8_t>(out, static_cast<std::uint8_t>(e.species));
            put<std::int32_t>(out, e.detector_id);
            put<double>(out, e.slow_fraction);
        }
        for (std::size_t c = 0; c < rs.channels.size(); ++c) {
            const auto& ch = rs.channels[c];
            const auto& v = rec.chans[c];
            if (v.size() != rs.record_len)
                throw FormatError("record length mismatch while writing");
            put<std::uint32_t>(out, c < rec.clipped.size() ? rec.clipped[c] : 0);
            if (ch.dtype == ChannelDesc::Dtype::i16) {
                for (double x : v)
                    put<std::int16_t>(out,
                                      static_cast<std::int16_t>(std::lround(x / ch.scale)));
            } else {
                for (double x : v) put<float>(out, static_cast<float>(x));
            }
        }
    }
    if (!out) throw FormatError("write failed: " + path);
}

RecordSet read_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kRecordMagic, 4) != 0)
        throw FormatError("not a record file: " + path);
    if (take<std::uint32_t>(in, "version") != kVersion)
        throw FormatError("unsupported record file version: " + path);

    RecordSet rs;
    rs.cfg_hash = take<std::uint64_t>(in, "config hash");
    rs.seed = take<std::uint64_t>(in, "seed");
    rs.dt = take<double>(in, "dt");
    rs.record_len = take<std::uint32_t>(in, "record length");
    const auto n_ch = take<std::uint32_t>(in, "channel count");
    const auto n_rec = take<std::uint32_t>(in, "record count");
    for (std::uint32_t c = 0; c < n_ch; ++c) {
        ChannelDesc ch;
        ch.label = take_string(in, "channel label");
        const auto dt8 = take<std::uint8_t>(in, "channel dtype");
        if (dt8 > 1) throw FormatError("bad channel dtype in: " + path);
        ch.dtype = static_cast<ChannelDesc::Dtype>(dt8);
        ch.scale = take<double>(in, "channel scale");
        rs.channels.push_back(std::move(ch));
    }
    rs.records.resize(n_rec);
    for (auto& rec : rs.records) {
        rec.flags = take<std::uint8_t>(in, "record flags");
        const auto n_truth = take<std::uint32_t>(in, "truth count");
        rec.truth.resize(n_truth);
        for (auto& e : rec.truth) {
            e.energy_kevee = take<double>(in, "truth energy");
            e.t_arrival = take<double>(in, "truth arrival");
            const auto sp = take<std::uint8_t>(in, "truth species");
            if (sp > 1) throw FormatError("bad species in: " + path);
            e.species = static_cast<Species>(sp);
            e.detector_id = take<std::int32_t>(in, "truth detector");
            e.slow_fraction = take<double>(in, "truth slow fraction");
        }
        rec.chans.resize(n_ch);
        rec.clipped.resize(n_ch);
        for (std::uint32_t c = 0; c < n_ch; ++c) {
            rec.clipped[c] = take<std::uint32_t>(in, "clip count");
            auto& v = rec.chans[c];
            v.resize(rs.record_len);
            if (rs.channels[c].dtype == ChannelDesc::Dtype::i16) {
                const double scale = rs.channels[c].scale;
                for (auto& x : v)
                    x = static_cast<double>(take<std::int16_t>(in, "sample")) * scale;
            } else {
                for (auto& x : v)
                    x = static_cast<double>(take<float>(in, "sample"));
            }
        }
    }
    return rs;
}

void write_calibration(const std::string& path, const CalibrationData& cal) {
    if (cal.h.bins.size() != cal.valid.size())
        throw FormatError("calibration spectrum/mask length mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out.write(kCalMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, cal.cfg_hash);
    put<double>(out, cal.df);
    put<std::int32_t>(out, cal.resonator_id);
    put<std::uint64_t>(out, cal.records_averaged);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cal.h.bins.size()));
    for (const auto& b : cal.h.bins) {
        put<double>(out, b.real());
        put<double>(out, b.imag());
    }
    out.write(reinterpret_cast<const char*>(cal.valid.data()),
              static_cast<std::streamsize>(cal.valid.size()));
    if (!out) throw FormatError("write failed: " + path);
}

CalibrationData read_calibration(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCalMagic, 4) != 0)
        throw FormatError("not a calibration file: " + path);
    if (take<std::uint32_t>(in, "version") != kVersion)
        throw FormatError("unsupported calibration file version: " + path);

    CalibrationData cal;
    cal.cfg_hash = take<std::uint64_t>(in, "config hash");
    cal.df = take<double>(in, "df");
    cal.resonator_id = take<std::int32_t>(in, "resonator id");
    cal.records_averaged = take<std::uint64_t>(in, "records averaged");
    const auto n = take<std::uint32_t>(in, "bin count");
    cal.h.df = cal.df;
    cal.h.bins.resize(n);
    for (auto& b : cal.h.bins) {
        const double re = take<double>(in, "bin real");
        const double im = take<double>(in, "bin imag");
        b = {re, im};
    }
    cal.valid.resize(n);
    in.read(reinterpret_cast<char*>(cal.valid.data()), n);
    if (!in) throw FormatError("truncated calibration file: " + path);
    return cal;
}

}  // namespace fdm
