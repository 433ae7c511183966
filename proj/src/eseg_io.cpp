#include "eegad/eseg_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace eegad {

namespace {

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& off) {
    if (off + sizeof(T) > in.size()) throw DataError("ESEG: truncated file");
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot open for writing: " + tmp);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw DataError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    atomic_write_bytes(path, text);
}

void write_eseg(const std::filesystem::path& path, const EegSegment& seg) {
    std::string out;
    out.reserve(32 + seg.patient_id.size() + seg.data.values().size() * 4);
    out.append("ESEG", 4);
    put<std::uint16_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(seg.channels()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(seg.length()));
    put<float>(out, seg.sample_rate);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(seg.label));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(seg.patient_id.size()));
    out.append(seg.patient_id);
    for (float v : seg.data.values()) put<float>(out, v);
    atomic_write_bytes(path, out);
}

EegSegment read_eseg(const std::filesystem::path& path) {
    const std::string in = read_file_bytes(path);
    if (in.size() < 4 || in.compare(0, 4, "ESEG") != 0) {
        throw DataError("ESEG: bad magic in " + path.string());
    }
    std::size_t off = 4;
    const auto version = get<std::uint16_t>(in, off);
    if (version != 1) throw DataError("ESEG: unsupported version");
    const auto K = get<std::uint32_t>(in, off);
    const auto L = get<std::uint32_t>(in, off);
    const float rate = get<float>(in, off);
    const auto label_raw = get<std::uint8_t>(in, off);
    if (label_raw > 3) throw DataError("ESEG: bad label byte");
    const auto pid_len = get<std::uint32_t>(in, off);
    if (off + pid_len > in.size()) throw DataError("ESEG: truncated patient id");
    std::string pid = in.substr(off, pid_len);
    off += pid_len;

    EegSegment seg;
    seg.data = MatF(K, L);
    seg.sample_rate = rate;
    seg.label = static_cast<Label>(label_raw);
    seg.patient_id = std::move(pid);
    for (float& v : seg.data.values()) v = get<float>(in, off);
    return seg;
}

void write_segment_csv(const std::filesystem::path& path, const EegSegment& seg) {
    std::ostringstream out;
    out << "# rate=" << seg.sample_rate << " label=" << label_name(seg.label)
        << " patient=" << seg.patient_id << "\n";
    char buf[64];
    for (std::size_t r = 0; r < seg.channels(); ++r) {
        const float* row = seg.data.row(r);
        for (std::size_t c = 0; c < seg.length(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(row[c]));
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    atomic_write_text(path, out.str());
}

EegSegment read_segment_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open file: " + path.string());
    std::string header;
    std::getline(f, header);
    if (header.rfind("# ", 0) != 0) throw DataError("segment CSV: missing header line");

    EegSegment seg;
    {
        std::istringstream hs(header.substr(2));
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq);
            const std::string val = tok.substr(eq + 1);
            if (key == "rate") seg.sample_rate = std::stof(val);
            else if (key == "label") seg.label = label_from_name(val);
            else if (key == "patient") seg.patient_id = val;
        }
    }
    if (seg.sample_rate <= 0) throw DataError("segment CSV: missing or bad rate");

    std::vector<std::vector<float>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<float> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stof(cell));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DataError("segment CSV: ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("segment CSV: no channel rows");
    seg.data = MatF(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(rows[r].begin(), rows[r].end(), seg.data.row(r));
    }
    return seg;
}

EegSegment read_segment(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".eseg") return read_eseg(path);
    if (ext == ".csv") return read_segment_csv(path);
    // Sniff the magic.
    std::ifstream f(path, std::ios::binary);
    char magic[4] = {};
    f.read(magic, 4);
    if (f && std::memcmp(magic, "ESEG", 4) == 0) return read_eseg(path);
    return read_segment_csv(path);
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
    std::ostringstream out;
    out << "file,label,patient_id,seed\n";
    for (const auto& r : rows) {
        out << r.file << ',' << label_name(r.label) << ',' << r.patient_id << ',' << r.seed
            << '\n';
    }
    atomic_write_text(path, out.str());
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open manifest: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw DataError("manifest: empty file");
    std::vector<ManifestRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string file, label, pid, seed;
        if (!std::getline(ls, file, ',') || !std::getline(ls, label, ',') ||
            !std::getline(ls, pid, ',') || !std::getline(ls, seed)) {
            throw DataError("manifest: malformed row: " + line);
        }
        rows.push_back({file, label_from_name(label), pid, std::stoull(seed)});
    }
    return rows;
}

Dataset load_dataset(const std::filesystem::path& manifest_path, float duration_s) {
    const auto rows = read_manifest(manifest_path);
    const auto dir = manifest_path.parent_path();
    Dataset ds;
    ds.duration_s = duration_s;
    ds.segments.reserve(rows.size());
    for (const auto& r : rows) {
        EegSegment seg = read_segment(dir / r.file);
        seg.label = r.label;
        seg.patient_id = r.patient_id;
        ds.segments.push_back(std::move(seg));
    }
    ds.validate_uniform();
    return ds;
}

}  // namespace eegad
