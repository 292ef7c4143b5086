#include "perfusion/dataset_io.hpp"

#include <fstream>

#include "perfusion/errors.hpp"
#include "perfusion/io_util.hpp"

namespace perfusion {

namespace {
constexpr char kMagic[4] = {'P', 'B', 'E', 'N'};
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);

    out.write(kMagic, 4);
    write_le<std::uint16_t>(out, kDatasetFormatVersion);
    write_le<std::uint64_t>(out, ds.samples.size());
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(ds.grid.n_samples));
    write_le_f64(out, ds.grid.span);
    write_le_f64(out, ds.sigma);

    const auto n = static_cast<std::size_t>(ds.grid.n_samples);
    for (const Sample& s : ds.samples) {
        if (s.aif.size() != n || s.tcc.size() != n)
            throw DataError("save_dataset: sample length does not match grid");
        write_le<std::uint32_t>(out, s.aif_id);
        for (double v : s.aif) write_le_f64(out, v);
        for (double v : s.tcc) write_le_f64(out, v);
        write_le_f64(out, s.cbf_true);
        write_le_f64(out, s.tmax_true);
        write_le_f64(out, s.cbv_true);
    }
    if (!out) throw DataError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a dataset file (bad magic): " + path);
    const auto version = read_le<std::uint16_t>(in);
    if (version != kDatasetFormatVersion)
        throw DataError("unsupported dataset version " + std::to_string(version) + ": " + path);

    Dataset ds;
    const auto count = read_le<std::uint64_t>(in);
    ds.grid.n_samples = read_le<std::uint16_t>(in);
    ds.grid.span = read_le_f64(in);
    ds.sigma = read_le_f64(in);
    ds.grid.validate();

    const auto n = static_cast<std::size_t>(ds.grid.n_samples);
    ds.samples.resize(count);
    for (Sample& s : ds.samples) {
        s.aif_id = read_le<std::uint32_t>(in);
        s.aif.resize(n);
        s.tcc.resize(n);
        for (double& v : s.aif) v = read_le_f64(in);
        for (double& v : s.tcc) v = read_le_f64(in);
        s.cbf_true = read_le_f64(in);
        s.tmax_true = read_le_f64(in);
        s.cbv_true = read_le_f64(in);
    }
    return ds;
}

void export_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);

    const int n = ds.grid.n_samples;
    for (int i = 0; i < n; ++i) out << "aif_" << i << ",";
    for (int i = 0; i < n; ++i) out << "tcc_" << i << ",";
    out << "cbf,tmax,cbv,aif_id\n";

    for (const Sample& s : ds.samples) {
        for (double v : s.aif) out << fmt_f64(v) << ",";
        for (double v : s.tcc) out << fmt_f64(v) << ",";
        out << fmt_f64(s.cbf_true) << "," << fmt_f64(s.tmax_true) << "," << fmt_f64(s.cbv_true)
            << "," << s.aif_id << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

} // namespace perfusion
