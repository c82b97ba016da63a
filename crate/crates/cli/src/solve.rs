use magt_core::equilibria::{
    check_ess, enumerate_nash_2p_with_cap, iterated_dominance, verify_nash, write_nash_csv,
    DominanceMode, EssVerdict, NashResult,
};
use magt_core::{Game, LoadedGame};

use crate::config::symmetric_view;
use crate::failure::{CliResult, Failure};
use crate::output::OutputDir;

pub struct SolveOptions {
    pub symmetric: bool,
    pub mode: DominanceMode,
    pub cap: usize,
    pub tolerance: f64,
    pub resolution: usize,
}

fn surviving_text(game: &Game, surviving: &[Vec<usize>]) -> String {
    surviving
        .iter()
        .enumerate()
        .map(|(p, acts)| {
            let names: Vec<&str> = acts.iter().map(|&a| game.action_name(p, a)).collect();
            format!("{}: {{{}}}", game.players()[p], names.join(","))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Writes `dominance.csv`, `nash.csv` and, for symmetric games, `ess.csv`.
pub fn run(loaded: &LoadedGame, options: &SolveOptions, out: &mut OutputDir) -> CliResult<()> {
    let game = &loaded.game;
    let sym = if options.symmetric {
        Some(symmetric_view(loaded).ok_or_else(|| {
            Failure::input("--symmetric given but the game is not a symmetric 2-player game")
        })?)
    } else {
        None
    };
    if options.tolerance.is_nan() || options.tolerance < 0.0 {
        return Err(Failure::input("--tolerance must be nonnegative"));
    }

    let counts: Vec<String> = game.action_counts().iter().map(usize::to_string).collect();
    println!(
        "game: {} players, actions {}",
        game.num_players(),
        counts.join("x")
    );

    let reduced = iterated_dominance(game, options.mode)?;
    out.write_with("dominance.csv", |w| reduced.write_log_csv(w))?;
    match reduced.solution() {
        Some(profile) => println!(
            "dominance ({}): {} eliminated, surviving profile {}",
            options.mode,
            reduced.log.len(),
            game.format_profile(&profile)
        ),
        None => println!(
            "dominance ({}): {} eliminated, surviving {}",
            options.mode,
            reduced.log.len(),
            surviving_text(game, &reduced.surviving)
        ),
    }
    if reduced.order_dependent {
        println!("note: weak elimination can depend on removal order");
    }

    let equilibria: Vec<NashResult> = enumerate_nash_2p_with_cap(game, options.cap)?
        .iter()
        .map(|r| verify_nash(game, &r.profile, options.tolerance))
        .collect::<magt_core::Result<_>>()?;
    out.write_with("nash.csv", |w| write_nash_csv(&equilibria, w))?;
    println!("nash: {} equilibria", equilibria.len());
    for r in &equilibria {
        let shown = match r.profile.as_pure() {
            Some(p) => game.format_profile(&p),
            None => r.profile.to_string(),
        };
        println!(
            "  {shown} {}{} regret={}{}",
            if r.strict { "strict " } else { "" },
            match r.kind {
                magt_core::equilibria::NashKind::Pure => "pure",
                magt_core::equilibria::NashKind::Mixed => "mixed",
            },
            r.regret,
            if r.equilibrium {
                ""
            } else {
                " (above tolerance)"
            }
        );
    }

    if let Some(sym) = sym {
        let verdicts: Vec<EssVerdict> = equilibria
            .iter()
            .filter(|r| {
                let s = r.profile.strategies();
                s[0].distance(&s[1]) <= 1e-9
            })
            .map(|r| check_ess(&sym, r.profile.strategy(0), options.resolution))
            .collect::<magt_core::Result<_>>()?;
        out.write_with("ess.csv", |w| write_ess_csv(&verdicts, w))?;
        println!("ess:");
        for v in &verdicts {
            print!("  {} ess={}", v.strategy, v.is_ess);
            match &v.witness {
                Some(x) => println!(" invaded by {x}"),
                None => println!(),
            }
        }
    }
    Ok(())
}

fn write_ess_csv(verdicts: &[EssVerdict], out: &mut Vec<u8>) -> magt_core::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "is_nash", "is_ess", "witness"])?;
    for v in verdicts {
        w.write_record([
            v.strategy.to_string(),
            v.is_nash.to_string(),
            v.is_ess.to_string(),
            v.witness
                .as_ref()
                .map(ToString::to_string)
                .unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
