//! Seeded generator of labeled synthetic corpora.
//!
//! Spam accounts come in two flavours: link promoters (templated tweets with
//! links, no mentions) and follow trains (templated tweets naming many
//! distinct accounts). Both tweet in fast bursts, shout in uppercase, rarely
//! retweet and keep their tweet length steady. Ham accounts write varied
//! text at a slow pace, retweet friends and mention a small circle.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::corpus::{AccountRecord, Corpus, Label, Tweet, MAX_TWEETS};

const SPAM_WORDS: &[&str] = &[
    "free",
    "win",
    "winner",
    "prize",
    "cash",
    "money",
    "download",
    "click",
    "now",
    "today",
    "offer",
    "deal",
    "deals",
    "cheap",
    "discount",
    "sale",
    "bonus",
    "gift",
    "card",
    "limited",
    "exclusive",
    "best",
    "amazing",
    "guaranteed",
    "instant",
    "earn",
    "income",
    "fast",
    "easy",
    "followers",
    "follow",
    "back",
    "gain",
    "more",
    "get",
    "here",
    "link",
    "visit",
    "promo",
    "code",
    "loans",
    "credit",
    "weight",
    "loss",
    "pills",
    "casino",
    "bet",
    "jackpot",
    "lucky",
    "hurry",
    "only",
    "left",
    "claim",
    "your",
    "reward",
    "viral",
    "trending",
    "likes",
    "boost",
    "music",
    "movies",
    "psp",
    "ipad",
    "iphone",
    "giveaway",
    "enter",
    "contest",
    "retweet",
];

const HAM_WORDS: &[&str] = &[
    "the",
    "a",
    "and",
    "to",
    "of",
    "in",
    "is",
    "it",
    "for",
    "on",
    "with",
    "this",
    "that",
    "was",
    "at",
    "my",
    "so",
    "just",
    "but",
    "have",
    "be",
    "are",
    "not",
    "out",
    "about",
    "up",
    "all",
    "what",
    "when",
    "can",
    "like",
    "time",
    "day",
    "good",
    "new",
    "great",
    "love",
    "think",
    "going",
    "know",
    "see",
    "really",
    "today",
    "tonight",
    "tomorrow",
    "week",
    "weekend",
    "morning",
    "coffee",
    "lunch",
    "dinner",
    "breakfast",
    "work",
    "office",
    "meeting",
    "project",
    "code",
    "bug",
    "release",
    "team",
    "school",
    "class",
    "exam",
    "homework",
    "teacher",
    "book",
    "reading",
    "chapter",
    "story",
    "movie",
    "film",
    "show",
    "episode",
    "season",
    "music",
    "song",
    "album",
    "concert",
    "band",
    "game",
    "match",
    "score",
    "team",
    "player",
    "league",
    "goal",
    "weather",
    "rain",
    "sunny",
    "cold",
    "snow",
    "summer",
    "winter",
    "spring",
    "autumn",
    "walk",
    "run",
    "gym",
    "bike",
    "trip",
    "travel",
    "flight",
    "train",
    "bus",
    "city",
    "home",
    "house",
    "kitchen",
    "garden",
    "dog",
    "cat",
    "kids",
    "family",
    "mom",
    "dad",
    "friend",
    "friends",
    "birthday",
    "party",
    "wedding",
    "holiday",
    "vacation",
    "beach",
    "mountain",
    "park",
    "tea",
    "pizza",
    "cake",
    "cooking",
    "recipe",
    "photo",
    "picture",
    "video",
    "news",
    "article",
    "interesting",
    "funny",
    "sad",
    "happy",
    "tired",
    "busy",
    "excited",
    "finally",
    "again",
    "still",
    "never",
    "always",
    "maybe",
    "probably",
    "definitely",
    "thanks",
    "thank",
    "you",
    "everyone",
    "someone",
    "nobody",
    "anyone",
    "people",
    "world",
    "life",
    "year",
    "month",
    "hour",
    "minute",
    "late",
    "early",
    "soon",
    "yesterday",
    "last",
    "next",
    "first",
    "long",
    "short",
    "big",
    "small",
    "old",
    "young",
    "hard",
    "easy",
    "fun",
    "nice",
    "cool",
    "hot",
    "learned",
    "watched",
    "played",
    "cooked",
    "visited",
    "finished",
    "started",
    "tried",
    "bought",
    "found",
    "lost",
    "missed",
    "met",
    "called",
    "wrote",
    "read",
    "heard",
    "saw",
    "phone",
    "laptop",
    "internet",
    "update",
    "app",
    "website",
    "blog",
    "post",
    "thread",
    "question",
    "answer",
    "idea",
    "plan",
    "problem",
    "solution",
    "reason",
    "change",
    "point",
    "history",
    "science",
    "art",
    "museum",
    "library",
    "market",
    "shop",
    "street",
    "road",
    "river",
    "lake",
    "forest",
    "sky",
    "sunset",
    "moon",
    "stars",
    "night",
    "evening",
    "noon",
];

const HASHTAGS: &[&str] = &[
    "#win", "#free", "#deal", "#follow", "#tbt", "#news", "#music", "#monday", "#fun", "#food",
];

const SYLLABLES: &[&str] = &[
    "ka", "ri", "to", "mo", "la", "ne", "shi", "an", "el", "jo", "mi", "ra", "be", "co", "di",
    "fa", "gu", "ho", "ix", "ly", "zu", "ve", "wo", "qi",
];

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub lo: u64,
    pub hi: u64,
}

impl Span {
    pub const fn new(lo: u64, hi: u64) -> Self {
        Span { lo, hi }
    }

    fn sample(self, rng: &mut impl Rng) -> u64 {
        rng.gen_range(self.lo..=self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MentionBehavior {
    /// Probability that a tweet carries mentions at all.
    pub prob: f64,
    /// Mentions per mentioning tweet.
    pub count: Span,
    /// Number of distinct handles the account draws from.
    pub pool: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCounters {
    pub followers: Span,
    pub friends: Span,
    pub favorites: Span,
    pub lists: Span,
    pub statuses: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorProfile {
    pub label: Label,
    pub tweet_count: Span,
    pub vocab: &'static [&'static str],
    pub words_per_tweet: Span,
    /// Probability that a tweet reuses the account's template text.
    pub template_reuse_prob: f64,
    /// Per content word probability of being written in uppercase.
    pub uppercase_prob: f64,
    /// Probability that a tweet carries links, and how many.
    pub link_prob: f64,
    pub links_per_tweet: Span,
    pub mentions: MentionBehavior,
    pub hashtag_prob: f64,
    pub retweet_prob: f64,
    /// Mean of the exponential gap between consecutive tweets.
    pub mean_gap_minutes: f64,
    /// Up to this many `!` are appended to a templated tweet.
    pub length_jitter: u64,
    pub counters: ProfileCounters,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("invalid behavior profile: {0}")]
pub struct ProfileError(String);

impl BehaviorProfile {
    pub fn ham() -> Self {
        BehaviorProfile {
            label: Label::Ham,
            tweet_count: Span::new(15, 60),
            vocab: HAM_WORDS,
            words_per_tweet: Span::new(3, 20),
            template_reuse_prob: 0.05,
            uppercase_prob: 0.04,
            link_prob: 0.25,
            links_per_tweet: Span::new(1, 1),
            mentions: MentionBehavior {
                prob: 0.25,
                count: Span::new(1, 2),
                pool: 6,
            },
            hashtag_prob: 0.15,
            retweet_prob: 0.3,
            mean_gap_minutes: 360.0,
            length_jitter: 0,
            counters: ProfileCounters {
                followers: Span::new(40, 3000),
                friends: Span::new(40, 1500),
                favorites: Span::new(0, 6000),
                lists: Span::new(0, 40),
                statuses: Span::new(300, 25_000),
            },
        }
    }

    /// Legitimate news or brand account: link-heavy and partly templated,
    /// overlapping with link promoters.
    pub fn ham_broadcaster() -> Self {
        BehaviorProfile {
            tweet_count: Span::new(20, 80),
            words_per_tweet: Span::new(5, 12),
            template_reuse_prob: 0.45,
            uppercase_prob: 0.1,
            link_prob: 0.9,
            mentions: MentionBehavior {
                prob: 0.1,
                count: Span::new(1, 1),
                pool: 10,
            },
            hashtag_prob: 0.3,
            retweet_prob: 0.1,
            mean_gap_minutes: 60.0,
            length_jitter: 2,
            counters: ProfileCounters {
                followers: Span::new(200, 8000),
                friends: Span::new(20, 1500),
                favorites: Span::new(0, 1500),
                lists: Span::new(0, 40),
                statuses: Span::new(2000, 40_000),
            },
            ..Self::ham()
        }
    }

    /// Spammer pushing links in near-identical tweets.
    pub fn spam_link_promoter() -> Self {
        BehaviorProfile {
            label: Label::Spam,
            tweet_count: Span::new(15, 60),
            vocab: SPAM_WORDS,
            words_per_tweet: Span::new(5, 9),
            template_reuse_prob: 0.85,
            uppercase_prob: 0.35,
            link_prob: 0.95,
            links_per_tweet: Span::new(1, 2),
            mentions: MentionBehavior {
                prob: 0.05,
                count: Span::new(1, 1),
                pool: 40,
            },
            hashtag_prob: 0.3,
            retweet_prob: 0.03,
            mean_gap_minutes: 20.0,
            length_jitter: 3,
            counters: ProfileCounters {
                followers: Span::new(0, 600),
                friends: Span::new(200, 3000),
                favorites: Span::new(0, 800),
                lists: Span::new(0, 15),
                statuses: Span::new(2000, 50_000),
            },
        }
    }

    /// Spammer advertising other accounts to follow.
    pub fn spam_follow_train() -> Self {
        BehaviorProfile {
            label: Label::Spam,
            tweet_count: Span::new(15, 60),
            vocab: SPAM_WORDS,
            words_per_tweet: Span::new(4, 7),
            template_reuse_prob: 0.8,
            uppercase_prob: 0.3,
            link_prob: 0.1,
            links_per_tweet: Span::new(1, 1),
            mentions: MentionBehavior {
                prob: 0.95,
                count: Span::new(3, 6),
                pool: 400,
            },
            hashtag_prob: 0.4,
            retweet_prob: 0.03,
            mean_gap_minutes: 15.0,
            length_jitter: 3,
            counters: ProfileCounters {
                followers: Span::new(300, 5000),
                friends: Span::new(800, 5000),
                favorites: Span::new(0, 800),
                lists: Span::new(0, 15),
                statuses: Span::new(2000, 40_000),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let probs = [
            ("template_reuse_prob", self.template_reuse_prob),
            ("uppercase_prob", self.uppercase_prob),
            ("link_prob", self.link_prob),
            ("mentions.prob", self.mentions.prob),
            ("hashtag_prob", self.hashtag_prob),
            ("retweet_prob", self.retweet_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(ProfileError(format!("{name} = {p} is not a probability")));
            }
        }
        let c = &self.counters;
        let spans = [
            ("tweet_count", self.tweet_count),
            ("words_per_tweet", self.words_per_tweet),
            ("links_per_tweet", self.links_per_tweet),
            ("mentions.count", self.mentions.count),
            ("followers", c.followers),
            ("friends", c.friends),
            ("favorites", c.favorites),
            ("lists", c.lists),
            ("statuses", c.statuses),
        ];
        for (name, s) in spans {
            if s.lo > s.hi {
                return Err(ProfileError(format!("{name} range is empty")));
            }
        }
        if self.tweet_count.lo == 0 || self.tweet_count.hi > MAX_TWEETS as u64 {
            return Err(ProfileError(format!(
                "tweet_count must lie within 1..={MAX_TWEETS}"
            )));
        }
        if self.words_per_tweet.lo == 0 {
            return Err(ProfileError("words_per_tweet must be at least 1".into()));
        }
        if self.vocab.is_empty() || self.mentions.pool == 0 {
            return Err(ProfileError(
                "vocab and mention pool must be non-empty".into(),
            ));
        }
        if !(self.mean_gap_minutes.is_finite() && self.mean_gap_minutes > 0.0) {
            return Err(ProfileError("mean_gap_minutes must be positive".into()));
        }
        Ok(())
    }
}

fn handle(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(2..=4);
    let mut s: String = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
    if rng.gen_bool(0.5) {
        s.push_str(&rng.gen_range(1..1000).to_string());
    }
    s
}

fn short_code(rng: &mut impl Rng) -> String {
    const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    (0..6)
        .map(|_| char::from(*ALNUM.choose(rng).unwrap()))
        .collect()
}

fn words(profile: &BehaviorProfile, rng: &mut impl Rng) -> Vec<String> {
    let n = profile.words_per_tweet.sample(rng);
    (0..n)
        .map(|_| {
            let w = *profile.vocab.choose(rng).unwrap();
            if rng.gen_bool(profile.uppercase_prob) {
                w.to_uppercase()
            } else {
                w.to_string()
            }
        })
        .collect()
}

struct AccountState<'p> {
    profile: &'p BehaviorProfile,
    template: Vec<String>,
    pool: Vec<String>,
}

impl AccountState<'_> {
    fn decorations(&self, rng: &mut impl Rng, parts: &mut Vec<String>) {
        let p = self.profile;
        if rng.gen_bool(p.mentions.prob) {
            let k = (p.mentions.count.sample(rng) as usize).min(self.pool.len());
            for h in self.pool.choose_multiple(rng, k) {
                parts.insert(rng.gen_range(0..=parts.len()), format!("@{h}"));
            }
        }
        if rng.gen_bool(p.hashtag_prob) {
            parts.push(HASHTAGS.choose(rng).unwrap().to_string());
        }
        if rng.gen_bool(p.link_prob) {
            for _ in 0..p.links_per_tweet.sample(rng) {
                parts.push(format!("http://bit.ly/{}", short_code(rng)));
            }
        }
    }

    fn tweet_text(&self, rng: &mut impl Rng) -> String {
        let p = self.profile;
        if rng.gen_bool(p.template_reuse_prob) {
            let mut parts = self.template.clone();
            let bangs = rng.gen_range(0..=p.length_jitter) as usize;
            if bangs > 0 {
                parts.last_mut().unwrap().push_str(&"!".repeat(bangs));
            }
            self.decorations(rng, &mut parts);
            return parts.join(" ");
        }
        if rng.gen_bool(p.retweet_prob) {
            let who = self.pool.choose(rng).unwrap();
            let mut parts = vec!["RT".to_string(), format!("@{who}:")];
            parts.extend(words(p, rng));
            return parts.join(" ");
        }
        let mut parts = words(p, rng);
        self.decorations(rng, &mut parts);
        parts.join(" ")
    }
}

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2017, 1, 1, 0, 0, 0).unwrap()
}

/// One account, fully determined by `profile` and `seed`. The user id is
/// derived from the seed; [`generate_corpus`] replaces it with a sequential
/// one.
///
/// Panics if the profile fails [`BehaviorProfile::validate`].
pub fn generate_account(profile: &BehaviorProfile, seed: u64) -> AccountRecord {
    profile.validate().expect("valid behavior profile");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<String> = (0..profile.mentions.pool)
        .map(|_| handle(&mut rng))
        .collect();
    let state = AccountState {
        profile,
        template: words(profile, &mut rng),
        pool,
    };

    let n = profile.tweet_count.sample(&mut rng) as usize;
    let gap = Exp::new(1.0 / (profile.mean_gap_minutes * 60.0)).expect("positive rate");
    let mut at = base_time() + Duration::seconds(rng.gen_range(0..180 * 24 * 3600));
    let mut tweets = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            let secs: f64 = gap.sample(&mut rng);
            at += Duration::seconds(secs.round().max(1.0) as i64);
        }
        tweets.push(Tweet::new(state.tweet_text(&mut rng), at));
    }

    let c = &profile.counters;
    AccountRecord {
        user_id: format!("u{seed:016x}"),
        screen_name: handle(&mut rng),
        followers: c.followers.sample(&mut rng),
        friends: c.friends.sample(&mut rng),
        favorites: c.favorites.sample(&mut rng),
        lists: c.lists.sample(&mut rng),
        statuses: c.statuses.sample(&mut rng),
        label: profile.label,
        tweets,
    }
}

/// `n_spam` spam accounts followed by `n_ham` ham accounts, with user ids
/// `u000001`, `u000002`, ... Each spam account is a link promoter or a
/// follow train with equal probability; one ham account in five is a
/// broadcaster.
///
/// Panics if `n_spam + n_ham == 0`.
pub fn generate_corpus(n_spam: usize, n_ham: usize, seed: u64) -> Corpus {
    let spam_profiles = [
        BehaviorProfile::spam_link_promoter(),
        BehaviorProfile::spam_follow_train(),
    ];
    let ham_profiles = [BehaviorProfile::ham(), BehaviorProfile::ham_broadcaster()];
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let plan: Vec<(&BehaviorProfile, u64)> = (0..n_spam + n_ham)
        .map(|i| {
            let account_seed: u64 = master.gen();
            let profile = if i < n_spam {
                &spam_profiles[usize::from(master.gen_bool(0.5))]
            } else {
                &ham_profiles[usize::from(master.gen_bool(0.2))]
            };
            (profile, account_seed)
        })
        .collect();
    let accounts: Vec<AccountRecord> = plan
        .par_iter()
        .enumerate()
        .map(|(i, (profile, s))| {
            let mut a = generate_account(profile, *s);
            a.user_id = format!("u{:06}", i + 1);
            a
        })
        .collect();
    Corpus::new(accounts).expect("generated corpus is non-empty with unique ids")
}
