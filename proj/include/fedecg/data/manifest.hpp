#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedecg/data/ecg.hpp"

namespace fedecg::data {

// Dataset-on-disk layout:
//   manifest: UTF-8 CSV, header `record_id,path,fs,label,shard`,
//             label in {SINUS,AFIB,OTHER,NOISE}, shard in {c0..c7,test};
//             path is relative to the manifest's directory.
//   signals:  raw little-endian f32, no header, length implied by file size.
//
// A converter producing this layout from an external archive only needs to
// emit one .f32 file per record plus the manifest row.

struct ManifestEntry {
    std::string record_id;
    std::string path;
    int fs = 200;
    RhythmLabel label = RhythmLabel::SINUS;
    std::string shard;
};

struct LoadedDataset {
    std::vector<EcgRecord> records;
    std::map<std::string, std::string> shard_assignment;  // record_id -> shard
};

// Parses the manifest and reads every referenced signal file. Errors name the
// offending record id.
LoadedDataset load_manifest(const std::string& manifest_path);

// Writes records + manifest under out_dir (signals in out_dir/signals/).
void write_dataset(const std::string& out_dir,
                   const std::vector<std::pair<EcgRecord, std::string>>& records_with_shard);

std::vector<float> read_f32_file(const std::string& path);
void write_f32_file(const std::string& path, const std::vector<float>& samples);

}  // namespace fedecg::data
