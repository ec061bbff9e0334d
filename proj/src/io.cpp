#include "polygnn/io.hpp"

#include "polygnn/errors.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace polygnn {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

double parse_double(const std::string& tok, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) throw IoError(where + ": bad number '" + tok + "'");
    return v;
}

long long parse_int(const std::string& tok, const std::string& where) {
    char* end = nullptr;
    const long long v = std::strtoll(tok.c_str(), &end, 10);
    if (tok.empty() || end != tok.c_str() + tok.size()) throw IoError(where + ": bad integer '" + tok + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

template <typename T>
void put(std::string& buf, const T& v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t& pos, const std::string& where) {
    if (pos + sizeof(T) > buf.size()) throw IoError(where + ": truncated file");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

void write_graph_file(const fs::path& path, const Graph& g) {
    std::ostringstream out;
    out << "n " << g.n_nodes << '\n';
    for (const auto& [i, j] : g.edges) out << "e " << i << ' ' << j << '\n';
    write_text_file(path, out.str());
}

Graph read_graph_file(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t n = 0;
    bool have_n = false;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    const std::string where = path.string();
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "n") {
            long long v = -1;
            if (!(ls >> v) || v < 1) throw IoError(where + ": bad node count");
            n = std::size_t(v);
            have_n = true;
        } else if (tag == "e") {
            long long i = -1, j = -1;
            if (!(ls >> i >> j) || i < 0 || j < 0) throw IoError(where + ": bad edge line '" + line + "'");
            edges.emplace_back(std::size_t(i), std::size_t(j));
        } else {
            throw IoError(where + ": unknown record '" + tag + "'");
        }
    }
    if (!have_n) throw IoError(where + ": missing node count");
    try {
        return build_graph(n, edges);
    } catch (const std::invalid_argument& e) {
        throw IoError(where + ": " + e.what());
    }
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

namespace {
constexpr std::uint32_t kPxtlVersion = 1;
}

void save_polycrystal(const fs::path& path, const Polycrystal& p) {
    validate(p);
    std::string buf = "PXTL";
    put(buf, kPxtlVersion);
    put(buf, std::int32_t(p.grid.nx));
    put(buf, std::int32_t(p.grid.ny));
    put(buf, std::int32_t(p.grid.nz));
    put(buf, std::uint32_t(p.n_grains()));
    put(buf, std::uint64_t(p.seed));
    buf.append(reinterpret_cast<const char*>(p.labels.data()), p.labels.size() * sizeof(std::uint16_t));
    for (const auto& o : p.orientations) {
        put(buf, o.phi1);
        put(buf, o.Phi);
        put(buf, o.phi2);
    }
    write_text_file(path, buf);
}

Polycrystal load_polycrystal(const fs::path& path) {
    const std::string buf = read_text_file(path);
    const std::string where = path.string();
    if (buf.size() < 4 || buf.compare(0, 4, "PXTL") != 0) throw IoError(where + ": not a PXTL file");
    std::size_t pos = 4;
    if (get<std::uint32_t>(buf, pos, where) != kPxtlVersion) throw IoError(where + ": unsupported PXTL version");
    Polycrystal p;
    p.grid.nx = get<std::int32_t>(buf, pos, where);
    p.grid.ny = get<std::int32_t>(buf, pos, where);
    p.grid.nz = get<std::int32_t>(buf, pos, where);
    if (p.grid.nx < 1 || p.grid.ny < 1 || p.grid.nz < 1) throw IoError(where + ": bad grid");
    const auto n_grains = get<std::uint32_t>(buf, pos, where);
    p.seed = get<std::uint64_t>(buf, pos, where);
    const std::size_t n_vox = p.grid.voxel_count();
    if (buf.size() != pos + n_vox * sizeof(std::uint16_t) + std::size_t(n_grains) * 3 * sizeof(double))
        throw IoError(where + ": size does not match header");
    p.labels.resize(n_vox);
    std::memcpy(p.labels.data(), buf.data() + pos, n_vox * sizeof(std::uint16_t));
    pos += n_vox * sizeof(std::uint16_t);
    p.orientations.resize(n_grains);
    for (auto& o : p.orientations) {
        o.phi1 = get<double>(buf, pos, where);
        o.Phi = get<double>(buf, pos, where);
        o.phi2 = get<double>(buf, pos, where);
    }
    try {
        validate(p);
    } catch (const std::invalid_argument& e) {
        throw IoError(where + ": " + e.what());
    }
    return p;
}

void write_dataset_csv(const fs::path& path, std::span<const DeformationSample> samples) {
    std::string out = kDatasetHeader;
    out += '\n';
    for (const auto& s : samples) {
        out += std::to_string(s.rve_id);
        for (int k = 0; k < 6; ++k) out += ',' + format_double(s.C[k]);
        out += ',' + format_double(s.psi);
        for (int k = 0; k < 6; ++k) out += ',' + format_double(s.S[k]);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<DeformationSample> read_dataset_csv(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    const std::string where = path.string();
    std::string line;
    if (!std::getline(in, line) || line != kDatasetHeader) throw IoError(where + ": unexpected dataset header");
    std::vector<DeformationSample> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 14) throw IoError(where + ": expected 14 fields, got " + std::to_string(f.size()));
        DeformationSample s;
        s.rve_id = int(parse_int(f[0], where));
        for (int k = 0; k < 6; ++k) s.C[k] = parse_double(f[std::size_t(1 + k)], where);
        s.psi = parse_double(f[7], where);
        for (int k = 0; k < 6; ++k) s.S[k] = parse_double(f[std::size_t(8 + k)], where);
        out.push_back(s);
    }
    return out;
}

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::string out = std::to_string(v.size());
    for (int x : v) out += ' ' + std::to_string(x);
    return out;
}

void put_layer(std::ostringstream& out, const char* group, std::size_t idx, const DenseLayer& l) {
    out << "layer " << group << ' ' << idx << ' ' << l.W.rows() << ' ' << l.W.cols() << '\n';
    for (Eigen::Index i = 0; i < l.W.rows(); ++i) {
        for (Eigen::Index j = 0; j < l.W.cols(); ++j) out << (j ? " " : "") << format_double(l.W(i, j));
        out << '\n';
    }
    for (Eigen::Index j = 0; j < l.b.size(); ++j) out << (j ? " " : "") << format_double(l.b[j]);
    out << '\n';
}

}  // namespace

std::string serialize_checkpoint(const ModelParams& p) {
    std::ostringstream out;
    const auto& a = p.arch;
    out << "polygnn-checkpoint 1\n";
    out << "use_graph " << (a.use_graph ? 1 : 0) << '\n';
    out << "n_features " << a.n_features << '\n';
    out << "max_nodes " << a.max_nodes << '\n';
    out << "gcn_channels " << join_ints(a.gcn_channels) << '\n';
    out << "encoder_hidden " << join_ints(a.encoder_hidden) << '\n';
    out << "encoded_dim " << a.encoded_dim << '\n';
    out << "mlp_hidden " << join_ints(a.mlp_hidden) << '\n';
    out << "propagation " << to_string(a.propagation) << '\n';
    out << "dropout_rate " << format_double(p.dropout_rate) << '\n';
    out << "l2_coefficient " << format_double(p.l2_coefficient) << '\n';
    out << "c_shift";
    for (int k = 0; k < 6; ++k) out << ' ' << format_double(p.norm.c_shift[k]);
    out << "\nc_scale";
    for (int k = 0; k < 6; ++k) out << ' ' << format_double(p.norm.c_scale[k]);
    out << "\npsi_scale " << format_double(p.norm.psi_scale) << '\n';
    for (std::size_t i = 0; i < p.gcn.size(); ++i) put_layer(out, "gcn", i, p.gcn[i]);
    for (std::size_t i = 0; i < p.encoder.size(); ++i) put_layer(out, "encoder", i, p.encoder[i]);
    for (std::size_t i = 0; i < p.mlp.size(); ++i) put_layer(out, "mlp", i, p.mlp[i]);
    put_layer(out, "output", 0, p.output);
    std::string body = out.str();
    char sum[32];
    std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
    return body + "checksum " + sum + '\n';
}

namespace {

class Tokens {
public:
    explicit Tokens(const std::string& text) : in_(text) {}

    std::string word() {
        std::string w;
        if (!(in_ >> w)) throw IoError("checkpoint: unexpected end of data");
        return w;
    }
    void expect(const std::string& key) {
        const auto w = word();
        if (w != key) throw IoError("checkpoint: expected '" + key + "', found '" + w + "'");
    }
    long long integer() { return parse_int(word(), "checkpoint"); }
    double number() { return parse_double(word(), "checkpoint"); }
    std::vector<int> int_list() {
        const auto n = integer();
        if (n < 0 || n > 1000) throw IoError("checkpoint: bad list length");
        std::vector<int> v;
        for (long long i = 0; i < n; ++i) v.push_back(int(integer()));
        return v;
    }

private:
    std::istringstream in_;
};

void read_layer(Tokens& t, const char* group, std::size_t idx, DenseLayer& l) {
    t.expect("layer");
    t.expect(group);
    if (t.integer() != (long long)idx) throw IoError("checkpoint: layer index mismatch");
    const auto rows = t.integer(), cols = t.integer();
    if (rows != l.W.rows() || cols != l.W.cols()) throw IoError(std::string("checkpoint: shape mismatch in ") + group);
    for (Eigen::Index i = 0; i < l.W.rows(); ++i)
        for (Eigen::Index j = 0; j < l.W.cols(); ++j) l.W(i, j) = t.number();
    for (Eigen::Index j = 0; j < l.b.size(); ++j) l.b[j] = t.number();
}

}  // namespace

ModelParams parse_checkpoint(const std::string& text, const Architecture* expected) {
    const auto pos = text.rfind("checksum ");
    if (pos == std::string::npos || (pos > 0 && text[pos - 1] != '\n'))
        throw ChecksumError("checkpoint: missing checksum");
    const std::string body = text.substr(0, pos);
    std::string stored = text.substr(pos + 9);
    while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
    char sum[32];
    std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
    if (stored != sum) throw ChecksumError("checkpoint: checksum mismatch");

    Tokens t(body);
    t.expect("polygnn-checkpoint");
    if (t.integer() != 1) throw IoError("checkpoint: unsupported version");
    Architecture a;
    t.expect("use_graph");
    a.use_graph = t.integer() != 0;
    t.expect("n_features");
    a.n_features = int(t.integer());
    t.expect("max_nodes");
    a.max_nodes = int(t.integer());
    t.expect("gcn_channels");
    a.gcn_channels = t.int_list();
    t.expect("encoder_hidden");
    a.encoder_hidden = t.int_list();
    t.expect("encoded_dim");
    a.encoded_dim = int(t.integer());
    t.expect("mlp_hidden");
    a.mlp_hidden = t.int_list();
    t.expect("propagation");
    try {
        a.propagation = parse_propagation_mode(t.word());
        validate(a);
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
    if (expected && !(*expected == a)) {
        std::string msg = "checkpoint architecture does not match the configuration";
        if (expected->propagation != a.propagation)
            msg += " (propagation " + to_string(a.propagation) + " vs " + to_string(expected->propagation) + ")";
        throw ArchitectureMismatch(msg);
    }

    ModelParams p = zero_params(a);
    t.expect("dropout_rate");
    p.dropout_rate = t.number();
    t.expect("l2_coefficient");
    p.l2_coefficient = t.number();
    t.expect("c_shift");
    for (int k = 0; k < 6; ++k) p.norm.c_shift[k] = t.number();
    t.expect("c_scale");
    for (int k = 0; k < 6; ++k) p.norm.c_scale[k] = t.number();
    t.expect("psi_scale");
    p.norm.psi_scale = t.number();
    for (std::size_t i = 0; i < p.gcn.size(); ++i) read_layer(t, "gcn", i, p.gcn[i]);
    for (std::size_t i = 0; i < p.encoder.size(); ++i) read_layer(t, "encoder", i, p.encoder[i]);
    for (std::size_t i = 0; i < p.mlp.size(); ++i) read_layer(t, "mlp", i, p.mlp[i]);
    read_layer(t, "output", 0, p.output);
    return p;
}

void save_checkpoint(const ModelParams& params, const fs::path& path) {
    write_text_file(path, serialize_checkpoint(params));
}

ModelParams load_checkpoint(const fs::path& path, const Architecture* expected) {
    return parse_checkpoint(read_text_file(path), expected);
}

void write_metadata(const fs::path& path, const std::map<std::string, std::string>& entries) {
    std::string out;
    for (const auto& [k, v] : entries) out += k + ' ' + v + '\n';
    write_text_file(path, out);
}

std::map<std::string, std::string> read_metadata(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto sp = line.find(' ');
        if (sp == std::string::npos) out[line] = "";
        else out[line.substr(0, sp)] = line.substr(sp + 1);
    }
    return out;
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
    for (std::size_t i = 0; i < header.size(); ++i) buffer_ += (i ? "," : "") + header[i];
    buffer_ += '\n';
}

CsvWriter& CsvWriter::operator<<(double x) { return *this << format_double(x); }

CsvWriter& CsvWriter::operator<<(long long x) { return *this << std::to_string(x); }

CsvWriter& CsvWriter::operator<<(const std::string& s) {
    if (row_started_) buffer_ += ',';
    buffer_ += s;
    row_started_ = true;
    return *this;
}

void CsvWriter::end_row() {
    buffer_ += '\n';
    row_started_ = false;
}

void CsvWriter::close() {
    if (closed_) return;
    closed_ = true;
    write_text_file(path_, buffer_);
}

CsvWriter::~CsvWriter() {
    try {
        close();
    } catch (...) {
    }
}

}  // namespace polygnn
