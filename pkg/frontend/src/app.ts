/**
 * Operator console single-page app.
 *
 * Server-authoritative: the UI renders snapshots and responses verbatim and
 * resyncs from GET /api/sessions/{id} after any conflict or network loss.
 * Trials are human-paced, so state is refreshed by 1-second polling rather
 * than push.
 */
import { ApiError, SessionApi, type FinalResponse, type Selection, type SessionSnapshot } from './api.js'
import {
  dashboardStats,
  describeOption,
  emptyDashboardMessage,
  finalChoices,
  formatReward,
  phaseFromSnapshot,
  refitMarkerPositions,
  resultLine,
  sparklinePath,
  suggestionBanner,
  trialLabel,
} from './model.js'

const POLL_INTERVAL_MS = 1000
const SPARK_W = 220
const SPARK_H = 40

class ConsoleApp {
  private api = new SessionApi()
  private sessionId: string | null = null
  private snapshot: SessionSnapshot | null = null
  private lastResult: FinalResponse | null = null
  private pollTimer: number | null = null

  constructor(private root: HTMLElement) {}

  async start(): Promise<void> {
    this.renderMessage('Starting session…')
    try {
      const snapshot = await this.api.createSession({})
      this.sessionId = snapshot.session_id
      this.snapshot = snapshot
      this.startPolling()
      this.render()
    } catch (err) {
      this.renderMessage(`Could not reach the session service: ${String(err)}`)
    }
  }

  private startPolling(): void {
    this.pollTimer = window.setInterval(() => void this.resync(), POLL_INTERVAL_MS)
  }

  /** Pull authoritative state; heals conflicts and dropped connections. */
  private async resync(): Promise<void> {
    if (!this.sessionId) return
    try {
      this.snapshot = await this.api.getSession(this.sessionId)
      this.render()
    } catch {
      // transient network loss: keep the last render, retry on next tick
    }
  }

  private async submitInitial(selection: Selection): Promise<void> {
    if (!this.sessionId) return
    try {
      await this.api.postInitial(this.sessionId, selection)
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 409)) throw err
    }
    await this.resync()
  }

  private async submitFinal(selection: Selection): Promise<void> {
    if (!this.sessionId) return
    try {
      this.lastResult = await this.api.postFinal(this.sessionId, selection)
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 409)) throw err
    }
    await this.resync()
  }

  private renderMessage(text: string): void {
    this.root.textContent = text
  }

  private render(): void {
    const snapshot = this.snapshot
    if (!snapshot) return
    this.root.replaceChildren(
      this.renderTrialPanel(snapshot),
      this.renderResultPanel(),
      this.renderDashboard(snapshot),
    )
  }

  private renderTrialPanel(snapshot: SessionSnapshot): HTMLElement {
    const panel = el('section', 'trial-panel')
    const phase = phaseFromSnapshot(snapshot)

    if (phase === 'finished') {
      panel.append(el('h2', '', 'Session complete'))
      panel.append(
        el('p', '', `Cumulative reward: ${formatReward(snapshot.cumulative_reward)}`),
      )
      return panel
    }

    const game = snapshot.game!
    panel.append(el('h2', '', trialLabel(game)))

    if (phase === 'pick-initial') {
      panel.append(el('p', '', 'Pick an option:'))
      for (const selection of ['A', 'B'] as const) {
        const option = selection === 'A' ? game.option_a : game.option_b
        const button = el('button', 'option-card', `Option ${selection}: ${describeOption(option)}`)
        button.addEventListener('click', () => void this.submitInitial(selection))
        panel.append(button)
      }
      return panel
    }

    // keep-or-switch: the pick is locked, the suggestion banner is up
    const initial = snapshot.initial_selection!
    const suggestion = snapshot.suggestion!
    panel.append(el('p', 'locked', `Your pick: option ${initial}`))
    panel.append(el('p', 'banner', suggestionBanner(suggestion, snapshot.agrees!)))
    const { keep, switchTo } = finalChoices(initial, suggestion)
    const keepButton = el('button', 'keep', `Keep option ${keep}`)
    keepButton.addEventListener('click', () => void this.submitFinal(keep))
    panel.append(keepButton)
    if (switchTo !== null) {
      const switchButton = el('button', 'switch highlighted', `Switch to option ${switchTo}`)
      switchButton.addEventListener('click', () => void this.submitFinal(switchTo))
      panel.append(switchButton)
    }
    return panel
  }

  private renderResultPanel(): HTMLElement {
    const panel = el('section', 'result-panel')
    const result = this.lastResult
    if (result) {
      panel.append(
        el('p', '', resultLine(result.payoff, result.foregone, result.trial_summary.final_selection)),
      )
    }
    return panel
  }

  private renderDashboard(snapshot: SessionSnapshot): HTMLElement {
    const panel = el('section', 'dashboard')
    panel.append(el('h3', '', 'Session dashboard'))
    void this.fillDashboard(panel, snapshot)
    return panel
  }

  private async fillDashboard(panel: HTMLElement, snapshot: SessionSnapshot): Promise<void> {
    if (!this.sessionId) return
    const trace = await this.api.getTrace(this.sessionId).catch(() => null)
    if (!trace) return
    const stats = dashboardStats(trace.records)
    const empty = emptyDashboardMessage(stats)
    if (empty) {
      panel.append(el('p', 'empty', empty))
      return
    }
    panel.append(
      el('p', '', `Trials: ${stats.totalTrials} · reward ${formatReward(stats.cumulativeReward)}`),
    )
    const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg')
    svg.setAttribute('width', String(SPARK_W))
    svg.setAttribute('height', String(SPARK_H))
    const path = document.createElementNS('http://www.w3.org/2000/svg', 'path')
    path.setAttribute('d', sparklinePath(stats.games.map((g) => g.acceptanceRate), SPARK_W, SPARK_H))
    path.setAttribute('fill', 'none')
    path.setAttribute('stroke', 'currentColor')
    svg.append(path)
    for (const x of refitMarkerPositions(snapshot.abc_update_games, stats.games.length, SPARK_W)) {
      const marker = document.createElementNS('http://www.w3.org/2000/svg', 'line')
      marker.setAttribute('x1', String(x))
      marker.setAttribute('x2', String(x))
      marker.setAttribute('y1', '0')
      marker.setAttribute('y2', String(SPARK_H))
      marker.setAttribute('stroke', 'orange')
      svg.append(marker)
    }
    panel.append(svg)
  }
}

function el(tag: string, className = '', text = ''): HTMLElement {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text) node.textContent = text
  return node
}

const mount = document.getElementById('app')
if (mount) {
  void new ConsoleApp(mount).start()
}
