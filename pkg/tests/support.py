"""Shared test harness: a small deployed contract plus everything needed to prove against it."""

from __future__ import annotations

import random

from settlefl import circuits as cc
from settlefl.chain import Ledger, default_gas_table
from settlefl.commitment import ParticipantRoster, commit_round
from settlefl.contract import ContractConfig, Tau, create
from settlefl.field import keygen, pk_digest
from settlefl.r1cs import Builder
from settlefl.scenario import reward_generator

OWNER = "0xowner"
ALICE = "0xalice"


class Harness:
    """N participants, T columns, a funded contract and the aggregator's key."""

    def __init__(self, variant="challenge", mode="multi-shot", N=4, T=3, B=1, delta=100, bond=0, seed=0, **extra):
        self.cfg = ContractConfig(N, T, B, variant, mode, delta, bond, **extra)
        self.params = self.cfg.circuit_params
        self.ledger = Ledger(block_interval=12)
        self.keypair = keygen(f"harness/{seed}")
        self.rho = random.Random(seed).getrandbits(200)
        self.roster = ParticipantRoster.from_labels([f"p{i}" for i in range(N)], N)
        self.V = reward_generator(seed, N, T, budget=1000)
        self.stake = sum(self.V[-1].row_sums()) + 10
        self.ledger.fund(OWNER, 10**18 + self.stake)
        self.ledger.fund(ALICE, 10**18)
        genesis = commit_round(self.V[0], self.roster, self.rho, self.keypair, 0)
        self.address, self.create_receipt = create(
            self.ledger, OWNER, pk_digest(self.keypair.pk), self.rho, genesis.C,
            self.roster.effective, self.cfg, default_gas_table(), self.stake,
        )
        self.sigs = {0: genesis.sig}

    @property
    def contract(self):
        return self.ledger.contracts[self.address]

    def rows(self, k):
        return self.V[k].copy_rows()

    def C(self, k):
        return commit_round(self.rows(k), self.roster, self.rho, self.keypair, k).C

    # -- transactions --------------------------------------------------------
    def tx(self, fn, *args, sender=OWNER, value=0):
        return self.ledger.submit_tx(sender, self.address, fn, *args, value=value)

    def commit(self, k=None, C=None, proof="auto", sender=OWNER):
        k = self.contract.r if k is None else k
        C = self.C(k) if C is None else C
        if proof == "auto":
            proof = None
            if self.cfg.variant.value == "proof":
                proof = cc.prove_transition(
                    self.params, k, self.rows(k), self.roster.P, self.roster.effective, self.rho, self.keypair
                )
        return self.tx("commit", C, proof, sender=sender)

    def challenge_proof(self, r_prime):
        return cc.prove_challenge(self.params, r_prime, self.rows(r_prime - 2), self.roster.P, self.rho, self.keypair)

    def challenge(self, r_prime, sender=ALICE, value=None):
        value = self.cfg.challenge_bond if value is None else value
        return self.tx("challenge", r_prime, self.challenge_proof(r_prime), sender=sender, value=value)

    def counter_proof(self, r_prime):
        return cc.prove_transition(
            self.params, r_prime - 1, self.rows(r_prime - 1), self.roster.P, self.roster.effective, self.rho, self.keypair
        )

    def counter(self, r_prime, sender=OWNER):
        return self.tx("counter", r_prime, self.counter_proof(r_prime), sender=sender)

    def distribution(self, b, r=None):
        """(p_vec, s_vec, proof) for batch b of the latest commitment."""
        r = self.contract.r - 1 if r is None else r
        inst = cc.prove_distribution(self.params, r, b, self.rows(r), self.roster.P, self.rho, self.keypair)
        half = (len(inst.public_inputs) - 4) // 2
        s_vec = list(inst.public_inputs[4 : 4 + half])
        p_vec = list(inst.public_inputs[4 + half :])
        return p_vec, s_vec, inst

    def distribute(self, b, sender=ALICE):
        p_vec, s_vec, inst = self.distribution(b)
        return self.tx("distribute", b, p_vec, s_vec, inst, sender=sender)

    def wait(self):
        dt = self.contract.t_unlock - self.ledger.now
        if dt > 0:
            self.ledger.advance_time(dt)

    # -- reaching states -----------------------------------------------------
    def drive_to(self, tau: Tau) -> None:
        """Reach ``tau`` by legitimate calls (Challenged only exists for the challenge variant)."""
        if tau is Tau.COMMITTED:
            ok(self.commit())
            return
        for _ in range(self.cfg.T - 1):
            ok(self.commit())
        if tau is Tau.CHALLENGED:
            ok(self.challenge(3))
            return
        ok(self.tx("finalize"))
        if tau is Tau.REWARD_INIT:
            return
        self.wait()
        ok(self.distribute(0))
        if tau is Tau.DISTRIBUTING:
            assert self.contract.tau is Tau.DISTRIBUTING
            return
        for b in range(1, self.cfg.num_batches):
            ok(self.distribute(b))
        assert self.contract.tau is Tau.DISTRIBUTED


def ok(receipt):
    assert receipt.success, receipt.revert_reason
    return receipt


def perturbation_trials(cs, witness, hints, trials, rng, skip=()):
    """Change one non-hint witness value per trial; count trials that broke no constraint."""
    candidates = [v for v in range(1, cs.num_variables) if v not in hints and v not in skip]
    survivors = []
    p = cs.p
    for _ in range(trials):
        var = rng.choice(candidates)
        delta = rng.randrange(1, p)
        if not cs.violated_after_change(witness, var, (witness[var] + delta) % p):
            survivors.append(var)
    return survivors


def fresh_builder():
    return Builder()
