#include "fedecg/data/manifest.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fedecg::data {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

std::vector<float> read_f32_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open signal file '" + path + "'");
    const std::streamsize bytes = in.tellg();
    if (bytes % 4 != 0) throw IoError("signal file '" + path + "' is not a whole number of f32s");
    in.seekg(0);
    std::vector<float> samples(static_cast<std::size_t>(bytes / 4));
    in.read(reinterpret_cast<char*>(samples.data()), bytes);
    if (!in) throw IoError("short read from '" + path + "'");
    return samples;
}

void write_f32_file(const std::string& path, const std::vector<float>& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(samples.data()),
              static_cast<std::streamsize>(samples.size() * 4));
    if (!out) throw IoError("short write to '" + path + "'");
}

LoadedDataset load_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest '" + manifest_path + "'");
    const fs::path base = fs::path(manifest_path).parent_path();

    std::string line;
    if (!std::getline(in, line)) throw IngestError("manifest is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "record_id,path,fs,label,shard")
        throw IngestError("manifest header must be 'record_id,path,fs,label,shard'");

    LoadedDataset ds;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw IngestError("manifest line " + std::to_string(line_no) + ": expected 5 fields");

        EcgRecord rec;
        rec.id = fields[0];
        try {
            rec.fs = std::stoi(fields[2]);
        } catch (const std::exception&) {
            throw IngestError("record '" + rec.id + "': bad sample rate '" + fields[2] + "'");
        }
        if (rec.fs != 200 && rec.fs != 300)
            throw IngestError("record '" + rec.id + "': fs must be 200 or 300");
        try {
            rec.label = label_from_name(fields[3]);
        } catch (const IngestError&) {
            throw IngestError("record '" + rec.id + "': unknown label '" + fields[3] + "'");
        }
        if (!valid_shard_name(fields[4]))
            throw IngestError("record '" + rec.id + "': invalid shard '" + fields[4] + "'");

        const fs::path sig_path = fs::path(fields[1]).is_absolute()
                                      ? fs::path(fields[1])
                                      : base / fields[1];
        try {
            rec.samples = read_f32_file(sig_path.string());
        } catch (const IoError& e) {
            throw IngestError("record '" + rec.id + "': " + e.what());
        }
        if (rec.samples.empty())
            throw IngestError("record '" + rec.id + "': signal file is empty");

        if (ds.shard_assignment.count(rec.id))
            throw IngestError("record '" + rec.id + "' appears more than once in the manifest");
        ds.shard_assignment[rec.id] = fields[4];
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

void write_dataset(const std::string& out_dir,
                   const std::vector<std::pair<EcgRecord, std::string>>& records_with_shard) {
    const fs::path base(out_dir);
    fs::create_directories(base / "signals");

    std::ofstream manifest(base / "manifest.csv", std::ios::binary | std::ios::trunc);
    if (!manifest) throw IoError("cannot open manifest for writing under '" + out_dir + "'");
    manifest << "record_id,path,fs,label,shard\n";
    for (const auto& [rec, shard] : records_with_shard) {
        const std::string rel = "signals/" + rec.id + ".f32";
        write_f32_file((base / rel).string(), rec.samples);
        manifest << rec.id << ',' << rel << ',' << rec.fs << ',' << label_name(rec.label) << ','
                 << shard << "\n";
    }
    if (!manifest) throw IoError("short write to manifest under '" + out_dir + "'");
}

}  // namespace fedecg::data
