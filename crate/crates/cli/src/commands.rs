use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use ipgaka_core::analysis::{evaluate, run_benchmarks, write_csv, BenchConfig};
use ipgaka_core::cgrid::{deserialize_grid, generate_grid, serialize_grid, ColumnWidths};
use ipgaka_core::imsi_crypto::{
    decrypt_imsi, encrypt_block, gen_params, join_blocks, split_blocks, ElGamalParams, Imsi, ImsiCiphertext,
    SecretKey,
};
use ipgaka_core::keygen::{derive_lte_key, form_key_sequence, KeySequence};
use ipgaka_core::protocol::{
    provision_subscriber, Credentials, Hss, HssConfig, Outcome, Protocol, ProvisionConfig, SubscriberState, Ue,
};
use ipgaka_core::simnet::{render_trace, run_attack_with, ScenarioConfig, Testbed, TestbedConfig, TEST_SNID};
use ipgaka_core::wire::biguint_to_fixed;

use crate::failure::Failure;
use crate::{Command, Formula, ImsiOp};

type Out = Result<String, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

/// Writes to `out` when given, otherwise returns the text for stdout.
fn emit(text: String, out: Option<&Path>) -> Out {
    match out {
        Some(p) => {
            write(p, text.as_bytes())?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn load_state(path: &Path) -> Result<SubscriberState, Failure> {
    Ok(SubscriberState::deserialize(&read(path)?)?)
}

fn scenario_config(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    match path {
        Some(p) => Ok(ScenarioConfig::parse(&read(p)?)?),
        None => Ok(ScenarioConfig::default()),
    }
}

fn testbed_config(sc: &ScenarioConfig, protocol: Option<Protocol>, seed: Option<u64>) -> TestbedConfig {
    let protocol = protocol.unwrap_or(sc.protocol);
    let seed = seed.unwrap_or(sc.seed);
    let mut cfg = TestbedConfig::new(protocol, seed);
    cfg.net = ScenarioConfig { seed, ..sc.clone() }.net();
    cfg.subscribers = sc.subscribers.max(1);
    cfg
}

fn outcome_name(o: Outcome) -> String {
    match o {
        Outcome::Authenticated => "Authenticated".into(),
        Outcome::Rejected(r) => r.to_string(),
    }
}

pub fn run(cmd: Command) -> Out {
    match cmd {
        Command::GenGrid { n, seed, widths, out } => {
            let widths = match widths {
                Some(w) => ColumnWidths::new(w)?,
                None => ColumnWidths::standard(n)?,
            };
            let grid = generate_grid(n, &widths, seed)?;
            emit(String::from_utf8(serialize_grid(&grid)).expect("grid text is UTF-8"), out.as_deref())
        }
        Command::GenKseq { grid, seed, out } => {
            let grid = deserialize_grid(read(&grid)?.as_bytes())?;
            emit(form_key_sequence(&grid, seed)?.serialize(), out.as_deref())
        }
        Command::DeriveKey { grid, kseq, seed, epoch } => {
            let grid = deserialize_grid(read(&grid)?.as_bytes())?;
            let ks = KeySequence::deserialize(&read(&kseq)?)?;
            ks.check_against(&grid)?;
            Ok(format!("{}\n", derive_lte_key(&grid, &ks, seed, epoch)?.to_hex()))
        }
        Command::Imsi { op } => imsi(op),
        Command::Provision { imsi, n, seed, epoch, ue_out, hss_out } => {
            let imsi = Imsi::parse(&imsi)?;
            let state = provision_subscriber(imsi, ProvisionConfig { n, seed, epoch })?;
            let text = state.serialize();
            write(&ue_out, text.as_bytes())?;
            write(&hss_out, text.as_bytes())?;
            let Credentials::Grid { grid, ks, .. } = &state.credentials else {
                unreachable!("provisioning always yields grid credentials")
            };
            Ok(format!(
                "imsi={}\ngrid={}\nkseq={}\nepoch={epoch}\n",
                state.imsi,
                grid.grid_id().as_str(),
                ks.sequence_id().as_str()
            ))
        }
        Command::RunSession { protocol, seed, config, ue, hss, sessions, skip_autn_check } => {
            let sc = scenario_config(config.as_deref())?;
            let cfg = testbed_config(&sc, protocol, seed);
            let mut tb = Testbed::new(cfg)?;
            if let Some(path) = &hss {
                tb.hss = Hss::new(HssConfig::allowing(&[TEST_SNID], cfg.seed));
                tb.hss.register(load_state(path)?);
            }
            if ue.is_some() || skip_autn_check {
                let state = match &ue {
                    Some(path) => load_state(path)?,
                    None => tb.ues[0].state().clone(),
                };
                let ue_cfg = Testbed::ue_config(cfg.protocol, &tb.authority, cfg.seed, !skip_autn_check);
                tb.ues[0] = Ue::new(ue_cfg, state);
            }
            let mut out = String::new();
            let mut failure = None;
            for i in 0..sessions.unwrap_or(sc.sessions).max(1) {
                let r = tb.run(0);
                let _ = writeln!(out, "session {i} protocol={}", cfg.protocol);
                out.push_str(&render_trace(&r.trace));
                let _ = writeln!(out, "outcome={}", outcome_name(r.outcome));
                match (r.outcome, &r.key_tree) {
                    (Outcome::Authenticated, Some(tree)) => out.push_str(&tree.render()),
                    (Outcome::Rejected(reason), _) => {
                        failure.get_or_insert(Failure::domain(reason.to_string(), format!("session {i} rejected")));
                    }
                    _ => {}
                }
            }
            match failure {
                Some(f) => {
                    print!("{out}");
                    Err(f)
                }
                None => Ok(out),
            }
        }
        Command::Attack { scenario, protocol, seed, config } => {
            let sc = scenario_config(config.as_deref())?;
            let scenario = scenario
                .or(sc.scenario)
                .ok_or_else(|| Failure::Usage("--scenario is required unless the config names one".into()))?;
            let report = run_attack_with(scenario, testbed_config(&sc, protocol, seed))?;
            Ok(report.render())
        }
        Command::Bench { config, out } => {
            let cfg = match &config {
                Some(p) => BenchConfig::parse(&read(p)?)?,
                None => BenchConfig::default(),
            };
            let rows = run_benchmarks(&cfg)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            write(&out, &buf)?;
            Ok(format!("wrote {} rows to {}\n", rows.len(), out.display()))
        }
        Command::Analyze { formula, params } => {
            let kind = match formula {
                Formula::Breach => "breach",
                Formula::Lifetime => "lifetime",
                Formula::Throughput => "throughput",
                Formula::Keys => "keys",
            };
            Ok(format!("{}\n", evaluate(kind, &params)?))
        }
    }
}

fn parse_pair(s: &str, field_len: usize, index: u16) -> Result<ImsiCiphertext, Failure> {
    let bad = || Failure::Usage(format!("--ct expects hex,hex; got {s:?}"));
    let (r, t) = s.split_once(',').ok_or_else(bad)?;
    let parse = |h: &str| BigUint::parse_bytes(h.trim().as_bytes(), 16).ok_or_else(bad);
    let (r, t) = (parse(r)?, parse(t)?);
    // Reject pairs wider than the modulus field.
    biguint_to_fixed(&r, field_len)?;
    biguint_to_fixed(&t, field_len)?;
    Ok(ImsiCiphertext { r, t, block_index: index })
}

fn imsi(op: ImsiOp) -> Out {
    match op {
        ImsiOp::GenParams { bits, seed, params_out, secret_out } => {
            let (params, sk) = gen_params(bits, seed)?;
            write(&params_out, params.to_text().as_bytes())?;
            write(&secret_out, sk.to_text().as_bytes())?;
            Ok(format!("bits={}\n", params.p.bits()))
        }
        ImsiOp::Encrypt { params, imsi, seed } => {
            let params = ElGamalParams::from_text(&read(&params)?)?;
            let imsi = Imsi::parse(&imsi)?;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let width = params.modulus_len();
            let mut out = String::new();
            for (i, block) in split_blocks(&imsi, &params)?.iter().enumerate() {
                let k = params.random_ephemeral(&mut rng);
                let ct = encrypt_block(&params, block, &k, i as u16)?;
                let hex = |v: &BigUint| -> Result<String, Failure> {
                    Ok(biguint_to_fixed(v, width)?.iter().map(|b| format!("{b:02x}")).collect())
                };
                let _ = writeln!(out, "{},{}", hex(&ct.r)?, hex(&ct.t)?);
            }
            Ok(out)
        }
        ImsiOp::Decrypt { params, secret, ct } => {
            let params = ElGamalParams::from_text(&read(&params)?)?;
            let sk = SecretKey::from_text(&read(&secret)?)?;
            let blocks = ct
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let ct = parse_pair(s, params.modulus_len(), i as u16)?;
                    Ok(decrypt_imsi(&params, &sk, &ct)?)
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            Ok(format!("{}\n", join_blocks(&blocks, &params)?))
        }
    }
}
