//! Small synthetic corpus so every pipeline stage can run offline.
//!
//! Ten two-second clips mix an amplitude-modulated tone with seeded noise.
//! Valence falls with the noise share and arousal rises with the modulation
//! rate, so the labels are learnable from the audio.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::dsp::encode_wav_i16;
use crate::regression::derive_seed;

pub const N_CLIPS: usize = 10;
pub const SAMPLE_RATE: u32 = 22050;
pub const DURATION_SECS: f64 = 2.0;

pub const STRONG_LABELS_TSV: &str = "\
segment_id\tstart_time_seconds\tend_time_seconds\tlabel
clip00\t0.000\t2.500\t/m/0ngt1
clip00\t1.200\t9.000\t/t/dd00038
clip00\t4.000\t5.000\t/m/0ngt1
clip01\t0.500\t3.000\t/m/020bb7
clip01\t0.000\t10.000\t/m/03m9d0z
clip01\t5.000\t6.000\t/m/020bb7
clip02\t2.000\t3.000\t/m/09x0r
clip02\t2.000\t2.500\t/m/07pbtc8
clip03\t1.000\t1.500\t/m/0bt9lr
clip03\t3.000\t3.500\t/m/0bt9lr
clip03\t5.000\t5.500\t/m/0bt9lr
clip03\t7.000\t7.500\t/m/0bt9lr
clip03\t9.000\t9.500\t/m/0bt9lr
clip03\t0.200\t4.000\t/m/0k4j
clip04\t0.000\t10.000\t/m/0j6m2
clip05\t3.000\t6.000\t/m/0k4j
clip05\t4.100\t4.600\t/m/0912c9
clip05\t0.300\t1.000\t/m/09x0r
clip06\t0.000\t10.000\t/t/dd00038
clip06\t6.200\t8.000\t/m/0ngt1
clip07\t0.000\t1.000\t/m/03m9d0z
clip07\t0.000\t1.000\t/m/020bb7
clip08\t0.500\t1.000\t/m/07pbtc8
clip08\t1.500\t2.000\t/m/07pbtc8
clip08\t0.900\t1.200\t/m/0bt9lr
clip09\t0.000\t4.000\t/m/09x0r
clip09\t2.000\t9.000\t/m/04rlf
";

pub const ONTOLOGY: [(&str, &str); 11] = [
    ("/m/0ngt1", "Thunder"),
    ("/t/dd00038", "Rain on surface"),
    ("/m/020bb7", "Bird vocalization, bird call, bird song"),
    ("/m/03m9d0z", "Wind"),
    ("/m/09x0r", "Speech"),
    ("/m/07pbtc8", "Walk, footsteps"),
    ("/m/0bt9lr", "Dog"),
    ("/m/0k4j", "Car"),
    ("/m/0j6m2", "Stream"),
    ("/m/0912c9", "Vehicle horn, car horn, honking"),
    ("/m/04rlf", "Music"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipSpec {
    pub tone_hz: f64,
    pub noise_share: f64,
    pub am_hz: f64,
    pub valence: f64,
    pub arousal: f64,
}

pub fn clip_id(i: usize) -> String {
    format!("clip{i:02}")
}

pub fn clip_spec(i: usize) -> ClipSpec {
    let noise_share = ((i * 7) % N_CLIPS) as f64 / N_CLIPS as f64;
    let am_step = ((i * 3) % N_CLIPS) as f64;
    let round3 = |x: f64| (x * 1000.0).round() / 1000.0;
    ClipSpec {
        tone_hz: 220.0 * 2f64.powf(i as f64 * 0.3),
        noise_share,
        am_hz: 0.5 + am_step,
        valence: round3(0.8 - 1.4 * noise_share),
        arousal: round3(-0.7 + 1.4 * am_step / (N_CLIPS - 1) as f64),
    }
}

pub fn synthesize(i: usize, seed: u64) -> Vec<f64> {
    let s = clip_spec(i);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
    let n = (DURATION_SECS * SAMPLE_RATE as f64) as usize;
    (0..n)
        .map(|t| {
            let t = t as f64 / SAMPLE_RATE as f64;
            let env = 0.6 + 0.4 * (2.0 * PI * s.am_hz * t).sin();
            let tone = (2.0 * PI * s.tone_hz * t).sin() * env;
            0.4 * ((1.0 - s.noise_share) * tone + s.noise_share * rng.gen_range(-1.0..1.0))
        })
        .collect()
}

pub fn labels_csv() -> String {
    let mut s = String::from("clip_id,valence,arousal\n");
    for i in 0..N_CLIPS {
        let c = clip_spec(i);
        s.push_str(&format!("{}.wav,{:.3},{:.3}\n", clip_id(i), c.valence, c.arousal));
    }
    s
}

pub fn ontology_json() -> String {
    let entries: Vec<_> = ONTOLOGY
        .iter()
        .map(|(id, name)| json!({ "id": id, "name": name, "description": "", "child_ids": [] }))
        .collect();
    serde_json::to_string_pretty(&entries).expect("static json") + "\n"
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixturePaths {
    pub audio_dir: PathBuf,
    pub labels: PathBuf,
    pub strong_labels: PathBuf,
    pub ontology: PathBuf,
}

impl FixturePaths {
    pub fn under(dir: &Path) -> Self {
        FixturePaths {
            audio_dir: dir.join("audio"),
            labels: dir.join("labels.csv"),
            strong_labels: dir.join("strong_labels.tsv"),
            ontology: dir.join("ontology.json"),
        }
    }
}

/// Writes audio, labels, strong labels and ontology under `dir`.
pub fn write_fixture(dir: &Path, seed: u64) -> io::Result<FixturePaths> {
    let p = FixturePaths::under(dir);
    fs::create_dir_all(&p.audio_dir)?;
    for i in 0..N_CLIPS {
        fs::write(p.audio_dir.join(format!("{}.wav", clip_id(i))), encode_wav_i16(&synthesize(i, seed), SAMPLE_RATE))?;
    }
    fs::write(&p.labels, labels_csv())?;
    fs::write(&p.strong_labels, STRONG_LABELS_TSV)?;
    fs::write(&p.ontology, ontology_json())?;
    Ok(p)
}
