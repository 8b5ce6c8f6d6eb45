//! The bundle of trained networks used by the tagger, predictor and
//! correction stages.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Axis;
use crate::neural::{init_network, load_network, save_network, Network, NetworkSpec};

/// Hidden units of the two repair decision networks.
pub const ERROR_NET_HIDDEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetId {
    BasSynDis,
    BasSemDis,
    AbsSynCat,
    AbsSemCat,
    PhraseStart,
    BasSynPre,
    BasSemPre,
    BasSynEq,
    BasSemEq,
    AbsSynEq,
    AbsSemEq,
    WordError,
    PhraseError,
}

impl NetId {
    pub const ALL: [NetId; 13] = [
        NetId::BasSynDis,
        NetId::BasSemDis,
        NetId::AbsSynCat,
        NetId::AbsSemCat,
        NetId::PhraseStart,
        NetId::BasSynPre,
        NetId::BasSemPre,
        NetId::BasSynEq,
        NetId::BasSemEq,
        NetId::AbsSynEq,
        NetId::AbsSemEq,
        NetId::WordError,
        NetId::PhraseError,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NetId::BasSynDis => "bas-syn-dis",
            NetId::BasSemDis => "bas-sem-dis",
            NetId::AbsSynCat => "abs-syn-cat",
            NetId::AbsSemCat => "abs-sem-cat",
            NetId::PhraseStart => "phrase-start",
            NetId::BasSynPre => "bas-syn-pre",
            NetId::BasSemPre => "bas-sem-pre",
            NetId::BasSynEq => "bas-syn-eq",
            NetId::BasSemEq => "bas-sem-eq",
            NetId::AbsSynEq => "abs-syn-eq",
            NetId::AbsSemEq => "abs-sem-eq",
            NetId::WordError => "word-error",
            NetId::PhraseError => "phrase-error",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn is_recurrent(self) -> bool {
        self.index() <= NetId::BasSemPre.index()
    }

    /// Layer sizes; `hidden` applies to every network except the two
    /// repair decision networks, which are fixed at 3-4-2.
    pub fn spec(self, hidden: usize) -> NetworkSpec {
        let syn = Axis::BasicSyn.len();
        let sem = Axis::BasicSem.len();
        let asyn = Axis::AbsSyn.len();
        let asem = Axis::AbsSem.len();
        match self {
            NetId::BasSynDis | NetId::BasSynPre => NetworkSpec::recurrent(syn, hidden, syn),
            NetId::BasSemDis | NetId::BasSemPre => NetworkSpec::recurrent(sem, hidden, sem),
            NetId::AbsSynCat => NetworkSpec::recurrent(syn, hidden, asyn),
            NetId::AbsSemCat => NetworkSpec::recurrent(sem, hidden, asem),
            NetId::PhraseStart => NetworkSpec::recurrent(syn, hidden, 2),
            NetId::BasSynEq => NetworkSpec::feedforward(2 * syn, hidden, 2),
            NetId::BasSemEq => NetworkSpec::feedforward(2 * sem, hidden, 2),
            NetId::AbsSynEq => NetworkSpec::feedforward(2 * asyn, hidden, 2),
            NetId::AbsSemEq => NetworkSpec::feedforward(2 * asem, hidden, 2),
            NetId::WordError | NetId::PhraseError => NetworkSpec::feedforward(3, ERROR_NET_HIDDEN, 2),
        }
    }

    fn file_name(self) -> String {
        format!("{}.net", self.name())
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NetId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown network `{s}`")))
    }
}

/// One network per [`NetId`].
#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    nets: Vec<Network>,
}

impl Models {
    /// Freshly initialized networks; each gets `seed + index` as its seed.
    pub fn untrained(hidden: usize, seed: u64) -> Result<Self> {
        let nets = NetId::ALL
            .iter()
            .map(|id| init_network(id.spec(hidden), seed.wrapping_add(id.index() as u64)))
            .collect::<Result<_>>()?;
        Ok(Models { nets })
    }

    /// All-zero weights: every output unit reads 0.5.
    pub fn zeros(hidden: usize) -> Result<Self> {
        let nets = NetId::ALL
            .iter()
            .map(|id| Network::zeros(id.spec(hidden)))
            .collect::<Result<_>>()?;
        Ok(Models { nets })
    }

    /// Assembles a bundle from networks given in [`NetId::ALL`] order.
    pub fn from_networks(nets: Vec<Network>) -> Result<Self> {
        if nets.len() != NetId::ALL.len() {
            return Err(Error::Dimension {
                what: "network bundle",
                expected: NetId::ALL.len(),
                found: nets.len(),
            });
        }
        for (id, net) in NetId::ALL.iter().zip(&nets) {
            check_spec(*id, net)?;
        }
        Ok(Models { nets })
    }

    pub fn get(&self, id: NetId) -> &Network {
        &self.nets[id.index()]
    }

    pub fn set(&mut self, id: NetId, net: Network) -> Result<()> {
        check_spec(id, &net)?;
        self.nets[id.index()] = net;
        Ok(())
    }

    pub fn hidden_units(&self) -> usize {
        self.get(NetId::BasSynDis).spec().n_hidden
    }

    /// Runs one forward step. Specs are checked on construction, so input
    /// sizes produced by this crate always match.
    pub(crate) fn run(&self, id: NetId, input: &[f64], context: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.get(id)
            .forward(input, context)
            .unwrap_or_else(|e| panic!("{id}: {e}"))
    }

    /// Writes one `<name>.net` file per network into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for id in NetId::ALL {
            save_network(self.get(id), dir.join(id.file_name()))?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut nets = Vec::with_capacity(NetId::ALL.len());
        for id in NetId::ALL {
            let path = dir.join(id.file_name());
            if !path.exists() {
                return Err(Error::MissingModel(path));
            }
            nets.push(load_network(&path)?);
        }
        Models::from_networks(nets)
    }
}

fn check_spec(id: NetId, net: &Network) -> Result<()> {
    let spec = net.spec();
    let expected = id.spec(spec.n_hidden);
    let hidden_ok = match id {
        NetId::WordError | NetId::PhraseError => spec.n_hidden >= 1,
        _ => true,
    };
    if spec.n_input != expected.n_input
        || spec.n_output != expected.n_output
        || spec.recurrent != expected.recurrent
        || !hidden_ok
    {
        return Err(Error::InvalidSpec(format!(
            "{id} expects {}-h-{} ({}), found {}-{}-{} ({})",
            expected.n_input,
            expected.n_output,
            kind(expected.recurrent),
            spec.n_input,
            spec.n_hidden,
            spec.n_output,
            kind(spec.recurrent)
        )));
    }
    Ok(())
}

fn kind(recurrent: bool) -> &'static str {
    if recurrent {
        "recurrent"
    } else {
        "feedforward"
    }
}
