import pytest

from conformance import GOLDEN, challenged_is_dead_in_proof_variant, conformance_problems
from settlefl.chain import Ledger, default_gas_table, hex_address
from settlefl.contract import ContractConfig, Tau, create
from support import ALICE, OWNER, Harness, ok


def test_create_initial_state():
    h = Harness()
    c = h.contract
    assert h.create_receipt.success
    assert (c.r, c.r_last, c.tau, c.xi) == (1, 2, Tau.COMMITTED, 0)
    assert h.ledger.balance(h.address) == h.stake
    assert c.commitment(0) == h.C(0)


def test_create_zero_stake():
    led = Ledger()
    led.fund(OWNER, 10**18)
    addr, rec = create(led, OWNER, 1, 2, 3, 4, ContractConfig(4, 3, 1), default_gas_table(), 0)
    assert not rec.success and rec.revert_reason == "ZeroStake"
    assert addr not in led.contracts


@pytest.mark.parametrize("variant", ["challenge", "proof"])
def test_commit_advances_round(variant):
    h = Harness(variant)
    ok(h.commit())
    assert h.contract.r == 2 and h.contract.history == [h.C(1)]
    assert h.ledger.event_log[-1].name == "committed"


def test_commit_only_owner():
    h = Harness()
    assert h.commit(sender=ALICE).revert_reason == "NotOwner"


def test_proof_commit_rejects_mismatched_commitment():
    h = Harness("proof")
    rec = h.commit(C=h.C(1) + 1)
    assert rec.revert_reason == "InvalidProof" and h.contract.r == 1


def test_round_limit():
    h = Harness(T=3)
    ok(h.commit())
    ok(h.commit())
    assert h.tx("commit", 5, None).revert_reason == "RoundLimit"


@pytest.mark.parametrize("variant,delay", [("challenge", 100), ("proof", 0)])
def test_finalize_sets_unlock(variant, delay):
    h = Harness(variant)
    ok(h.commit())
    rec = ok(h.tx("finalize"))
    assert h.contract.tau is Tau.REWARD_INIT
    assert h.contract.t_unlock == rec.timestamp + delay


def test_challenge_updates_r_last_and_takes_bond():
    h = Harness(bond=50)
    ok(h.commit())
    assert h.challenge(3, value=10).revert_reason == "InsufficientBond"
    before = h.ledger.balance(h.address)
    ok(h.challenge(3))
    assert h.contract.r_last == 3 and h.contract.tau is Tau.CHALLENGED
    assert h.ledger.balance(h.address) == before + 50
    assert h.challenge(3).revert_reason == "StaleRound"


def test_challenge_wrong_proof():
    h = Harness(T=4)
    ok(h.commit())
    ok(h.commit())
    # proof about C^2 offered against C^1
    rec = h.tx("challenge", 3, h.challenge_proof(4), sender=ALICE)
    assert rec.revert_reason == "InvalidProof"


def test_counter_guards():
    h = Harness()
    ok(h.commit())
    ok(h.commit())
    assert h.counter(3).revert_reason == "WrongState"
    ok(h.challenge(3))
    assert h.tx("counter", 2, h.counter_proof(3)).revert_reason == "RoundTooEarly"


def test_counter_forfeits_bond_to_owner():
    h = Harness(bond=40)
    ok(h.commit())
    ok(h.commit())
    ok(h.challenge(3))
    owner_before = h.ledger.balance(OWNER)
    ok(h.counter(3))
    assert h.contract.tau is Tau.REWARD_INIT
    assert h.ledger.balance(OWNER) == owner_before + 40
    assert h.contract.pending_bonds == []


def test_uncountered_challenge_refunds_bond_on_distribute():
    h = Harness(bond=40, mode="one-shot")
    ok(h.commit())
    ok(h.commit())
    ok(h.challenge(3))
    alice_before = h.ledger.balance(ALICE)
    assert h.distribute(0).revert_reason == "WindowNotElapsed"
    h.wait()
    ok(h.distribute(0))
    assert h.ledger.balance(ALICE) == alice_before + 40
    assert h.contract.tau is Tau.DISTRIBUTED


def test_distribute_pays_row_sums():
    h = Harness(N=4, T=3, B=2)
    h.drive_to(Tau.DISTRIBUTED)
    sums = h.V[2].row_sums()
    for i, p in enumerate(h.roster.P):
        assert h.ledger.balance(hex_address(p)) == sums[i]
    assert h.contract.xi == 4


def test_distribute_guards():
    h = Harness(N=4, T=3, B=2)
    h.drive_to(Tau.REWARD_INIT)
    h.wait()
    p, s, proof = h.distribution(0)
    assert h.tx("distribute", 2, p, s, proof).revert_reason == "BatchIndexOutOfRange"
    assert h.tx("distribute", 0, p[:1], s[:1], proof).revert_reason == "ShapeMismatch"
    bad = list(s)
    bad[0] += 1
    assert h.tx("distribute", 0, p, bad, proof).revert_reason == "InvalidProof"
    ok(h.distribute(0))
    assert h.distribute(0).revert_reason == "DoubleBatch"


def test_distribute_deploy_limit():
    h = Harness(N=80, T=2, B=80, mode="multi-shot")
    h.drive_to(Tau.REWARD_INIT)
    h.wait()
    rec = h.tx("distribute", 0, [1] * 80, [0] * 80, None)
    assert rec.revert_reason == "DeployLimit"


def test_force_finalize():
    h = Harness()
    assert h.tx("force_finalize", sender=ALICE).revert_reason == "Disabled"
    h = Harness(force_finalize_after=1000)
    ok(h.commit())
    assert h.tx("force_finalize", sender=ALICE).revert_reason == "WindowNotElapsed"
    h.ledger.advance_time(1000)
    ok(h.tx("force_finalize", sender=ALICE))
    assert h.contract.tau is Tau.REWARD_INIT


@pytest.mark.parametrize("variant", ["challenge", "proof"])
@pytest.mark.parametrize("mode", ["multi-shot", "one-shot"])
def test_state_machine_enumeration(variant, mode):
    assert conformance_problems(variant, mode) == []


def test_repeat_challenge_edge_with_more_columns():
    assert conformance_problems("challenge", "multi-shot", T=4) == []


def test_proof_variant_has_no_challenged_state():
    assert challenged_is_dead_in_proof_variant() == []


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_trace(name):
    run, expected = GOLDEN[name]
    assert run() == expected
