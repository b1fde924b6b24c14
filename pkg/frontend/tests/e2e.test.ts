/**
 * End-to-end: spawn the real Python session service and play one full game
 * through the API client, checking every displayed number against the
 * server transcript (GET /trace is the oracle for the dashboard).
 */
import { spawn, type ChildProcess } from 'node:child_process'
import { mkdtempSync, rmSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'
import { SessionApi, type FinalResponse, type Selection } from '../src/api.js'
import { dashboardStats, finalChoices, resultLine } from '../src/model.js'

const PORT = 8765 + (process.pid % 500)
const BASE = `http://127.0.0.1:${PORT}`

let server: ChildProcess
let storageDir: string
const api = new SessionApi(BASE)

async function waitForHealth(timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs
  while (Date.now() < deadline) {
    try {
      const health = await api.health()
      if (health.status === 'ok') return
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200))
  }
  throw new Error('session service did not become healthy')
}

beforeAll(async () => {
  storageDir = mkdtempSync(join(tmpdir(), 'console-e2e-'))
  server = spawn(
    'python3',
    ['-m', 'adasim.cli', 'serve', '--port', String(PORT), '--out', storageDir],
    { stdio: 'ignore' },
  )
  await waitForHealth()
}, 30000)

afterAll(() => {
  server?.kill()
  rmSync(storageDir, { recursive: true, force: true })
})

describe('operator console against the live service', () => {
  it('plays a full 25-trial game and matches the server transcript', async () => {
    const snapshot = await api.createSession({
      aid_mode: 'predictive',
      games_per_operator: 1,
      trials_per_game: 25,
      abc_update_interval_games: 1,
      seed: 99,
      abc_accepted_target: 50,
      abc_batch_size: 500,
      abc_max_batches: 1,
    })
    expect(snapshot.state).toBe('awaiting-initial')
    const sid = snapshot.session_id

    const results: FinalResponse[] = []
    for (let trial = 0; trial < 25; trial++) {
      const initial: Selection = trial % 2 === 0 ? 'A' : 'B'
      const suggested = await api.postInitial(sid, initial)
      // keep-or-switch exactly as the UI offers it
      const { keep, switchTo } = finalChoices(initial, suggested.suggestion)
      const final = switchTo ?? keep
      const result = await api.postFinal(sid, final)
      expect(result.trial_summary.final_selection).toBe(final)
      expect(result.trial_summary.initial_selection).toBe(initial)
      expect(result.trial_summary.suggestion).toBe(suggested.suggestion)
      results.push(result)
    }

    const last = results[results.length - 1]
    expect(last.state).toBe('finished')
    expect(last.session_summary?.trials).toBe(25)

    // every displayed payoff/foregone equals the server transcript
    const trace = await api.getTrace(sid)
    expect(trace.records).toHaveLength(25)
    results.forEach((result, trial) => {
      const record = trace.records[trial]
      expect(result.payoff).toBe(record.payoff)
      expect(result.foregone).toBe(record.foregone)
      expect(resultLine(result.payoff, result.foregone, record.final_selection)).toBe(
        resultLine(record.payoff, record.foregone, record.final_selection),
      )
    })

    // dashboard statistics equal offline recomputation from GET /trace
    const stats = dashboardStats(trace.records)
    expect(stats.totalTrials).toBe(25)
    expect(stats.cumulativeReward).toBeCloseTo(last.cumulative_reward, 9)
    expect(stats.meanRho).toBeCloseTo(last.session_summary!.mean_rho, 9)
    const manualReliance =
      trace.records.reduce((acc, r) => acc + r.reliance, 0) / trace.records.length
    expect(stats.games[0].meanReliance).toBeCloseTo(manualReliance, 12)
  }, 60000)

  it('resyncs from server state after a conflicting double post', async () => {
    const snapshot = await api.createSession({
      aid_mode: 'myopic',
      games_per_operator: 1,
      trials_per_game: 2,
      seed: 5,
      abc_accepted_target: 50,
      abc_batch_size: 500,
      abc_max_batches: 1,
    })
    const sid = snapshot.session_id
    await api.postInitial(sid, 'A')
    await expect(api.postInitial(sid, 'A')).rejects.toMatchObject({ status: 409 })
    // the authoritative snapshot still shows the awaiting-final step
    const resynced = await api.getSession(sid)
    expect(resynced.state).toBe('awaiting-final')
    expect(resynced.initial_selection).toBe('A')
    expect(resynced.suggestion).toBeDefined()
  }, 30000)
})
