from decoding.coverage import CoverageState, update_coverage


def _feed(state, tokens):
    for token in tokens:
        state = update_coverage(state, token)
    return state


def test_contiguous_match_meets_constraint():
    state = _feed(CoverageState.start([(5, 6)]), [4, 5, 6])
    assert state.met == (True,)
    assert state.all_met
    assert state.met_token_count == 2


def test_interrupted_match_resets():
    state = _feed(CoverageState.start([(5, 6)]), [5, 4, 6])
    assert state.met == (False,)
    assert state.met_token_count == 0


def test_mismatch_can_restart_the_match():
    state = _feed(CoverageState.start([(5, 6)]), [5, 5, 6])
    assert state.all_met


def test_met_is_sticky_and_counts_partial_progress():
    state = _feed(CoverageState.start([(5,), (6, 7, 8)]), [5, 6, 7])
    assert state.met == (True, False)
    assert state.met_token_count == 3
    assert state.total_tokens == 4
    assert _feed(state, [9]).met == (True, False)


def test_forced_tokens_continue_or_start():
    state = CoverageState.start([(5, 6), (5, 7), (8,)])
    assert state.forced_tokens() == (5, 8)
    state = update_coverage(state, 5)
    assert state.forced_tokens() == (6, 7, 8)
    assert _feed(state, [6, 7, 8]).forced_tokens() == (5,)


def test_no_constraints_is_trivially_met():
    state = CoverageState.start([])
    assert state.all_met
    assert state.forced_tokens() == ()


def test_no_match_starts_inside_a_word():
    state = update_coverage(CoverageState.start([(5,)]), 5, mid_word=True)
    assert state.met == (False,)
    assert state.forced_tokens(mid_word=True) == ()
    assert state.forced_tokens() == (5,)


def test_match_in_progress_continues_after_a_word_internal_piece():
    state = update_coverage(CoverageState.start([(4, 5)]), 4)
    state = update_coverage(state, 5, mid_word=True)
    assert state.all_met
    assert update_coverage(CoverageState.start([(4, 5)]), 4).forced_tokens(mid_word=True) == (5,)
